#include "pgo/kernels.hpp"

#include <cmath>

namespace pgo::kernels {

namespace {

SampleClass classify_one(const StackSample& s, const PathMapping& mapping) {
  SampleClass c;
  c.phase = classify_phase(s, mapping);
  const auto a = mapping.attribute(s.frames.back().file_path);
  c.leaf_library = a.library;
  c.leaf_module = a.module;
  return c;
}

double boundary_delta(const std::int64_t* prev, const std::int64_t* cur, std::size_t entries) {
  std::int64_t prev_total = 0;
  std::int64_t cur_total = 0;
  for (std::size_t e = 0; e < entries; ++e) {
    prev_total += prev[e];
    cur_total += cur[e];
  }
  if (prev_total == 0 || cur_total == 0) return -1.0;
  double sum = 0.0;
  for (std::size_t e = 0; e < entries; ++e) {
    const double p0 = static_cast<double>(prev[e]) / static_cast<double>(prev_total);
    const double p1 = static_cast<double>(cur[e]) / static_cast<double>(cur_total);
    sum += std::fabs(p1 - p0);
  }
  return sum;
}

}  // namespace

std::vector<SampleClass> classify_samples(std::span<const StackSample> samples, const PathMapping& mapping) {
  std::vector<SampleClass> out(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = classify_one(samples[static_cast<std::size_t>(i)], mapping);
  }
  return out;
}

std::vector<std::int64_t> window_counts(std::span<const Hit> hits, std::int64_t start_ms, std::int64_t width_ms,
                                        std::size_t windows, std::size_t entries) {
  const std::size_t cells = windows * entries;
  std::vector<std::int64_t> counts(cells, 0);
  if (width_ms <= 0 || cells == 0) return counts;
  const auto n = static_cast<std::ptrdiff_t>(hits.size());
#pragma omp parallel
  {
    std::vector<std::int64_t> local(cells, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const Hit& h = hits[static_cast<std::size_t>(i)];
      if (h.timestamp_ms < start_ms || h.entry >= entries) continue;
      const auto w = static_cast<std::size_t>((h.timestamp_ms - start_ms) / width_ms);
      if (w < windows) local[w * entries + h.entry] += h.weight;
    }
#pragma omp critical
    for (std::size_t c = 0; c < cells; ++c) counts[c] += local[c];
  }
  return counts;
}

std::vector<double> l1_deltas(std::span<const std::int64_t> counts, std::size_t windows, std::size_t entries) {
  if (windows < 2) return {};
  std::vector<double> out(windows - 1);
  const auto n = static_cast<std::ptrdiff_t>(windows - 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::size_t w = static_cast<std::size_t>(k) + 1;
    out[w - 1] = boundary_delta(counts.data() + (w - 1) * entries, counts.data() + w * entries, entries);
  }
  return out;
}

namespace serial {

std::vector<SampleClass> classify_samples(std::span<const StackSample> samples, const PathMapping& mapping) {
  std::vector<SampleClass> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(classify_one(s, mapping));
  return out;
}

std::vector<std::int64_t> window_counts(std::span<const Hit> hits, std::int64_t start_ms, std::int64_t width_ms,
                                        std::size_t windows, std::size_t entries) {
  std::vector<std::int64_t> counts(windows * entries, 0);
  if (width_ms <= 0) return counts;
  for (const Hit& h : hits) {
    if (h.timestamp_ms < start_ms || h.entry >= entries) continue;
    const auto w = static_cast<std::size_t>((h.timestamp_ms - start_ms) / width_ms);
    if (w < windows) counts[w * entries + h.entry] += h.weight;
  }
  return counts;
}

std::vector<double> l1_deltas(std::span<const std::int64_t> counts, std::size_t windows, std::size_t entries) {
  std::vector<double> out;
  for (std::size_t w = 1; w < windows; ++w) {
    out.push_back(boundary_delta(counts.data() + (w - 1) * entries, counts.data() + w * entries, entries));
  }
  return out;
}

}  // namespace serial

}  // namespace pgo::kernels
