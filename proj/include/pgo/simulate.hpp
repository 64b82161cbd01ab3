#pragma once

// Synthetic invocation traces: Zipf-skewed entry-point popularity counted in
// tumbling windows, with optional injected workload shifts.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "pgo/adaptive.hpp"

namespace pgo {

struct SimSpec {
  std::string app_id = "sim";
  std::size_t entries = 10;
  std::size_t windows = 30;
  std::int64_t window_ms = 43'200'000;
  std::int64_t start_ms = 0;
  std::int64_t invocations_per_window = 100'000;
  double skew = 2.0;  // Zipf exponent
  std::set<std::size_t> shift_windows;
  std::size_t shift_k = 2;  // ranks [0,k) trade probabilities with ranks [k,2k)
  double jitter = 0.0002;   // relative per-count noise, uniform in [-jitter, jitter]
  std::uint64_t seed = 7;
};

/// Entry-point probabilities by rank before any shift.
std::vector<double> zipf_probabilities(std::size_t n, double skew);

/// Pre-bucketed rows, one per (window, entry) with a nonzero count, in
/// window-then-entry order. Deterministic for a given spec.
std::vector<TraceRow> simulate(const SimSpec& spec);

std::string render_trace_csv(const std::vector<TraceRow>& rows, bool bucketed);

}  // namespace pgo
