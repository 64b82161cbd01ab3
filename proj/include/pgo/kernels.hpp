#pragma once

// Data-parallel kernels. Each has an OpenMP implementation and a serial
// reference in pgo::kernels::serial; the tests check they agree exactly.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgo/cct.hpp"

namespace pgo::kernels {

struct SampleClass {
  Phase phase = Phase::Runtime;
  LibraryId leaf_library;
  std::string leaf_module;

  friend bool operator==(const SampleClass&, const SampleClass&) = default;
};

std::vector<SampleClass> classify_samples(std::span<const StackSample> samples, const PathMapping& mapping);

/// Invocations of one entry point at one timestamp.
struct Hit {
  std::size_t entry = 0;
  std::int64_t timestamp_ms = 0;
  std::int64_t weight = 1;
};

/// Row-major [window][entry] counts of hits in tumbling windows
/// [start + k*width, start + (k+1)*width). Hits outside the range are ignored.
std::vector<std::int64_t> window_counts(std::span<const Hit> hits, std::int64_t start_ms, std::int64_t width_ms,
                                        std::size_t windows, std::size_t entries);

/// sum_i |p_i(k) - p_i(k-1)| for k = 1..windows-1. Boundaries where either
/// window has zero traffic are reported as negative (-1).
std::vector<double> l1_deltas(std::span<const std::int64_t> counts, std::size_t windows, std::size_t entries);

namespace serial {
std::vector<SampleClass> classify_samples(std::span<const StackSample> samples, const PathMapping& mapping);
std::vector<std::int64_t> window_counts(std::span<const Hit> hits, std::int64_t start_ms, std::int64_t width_ms,
                                        std::size_t windows, std::size_t entries);
std::vector<double> l1_deltas(std::span<const std::int64_t> counts, std::size_t windows, std::size_t entries);
}  // namespace serial

}  // namespace pgo::kernels
