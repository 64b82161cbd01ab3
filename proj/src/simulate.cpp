#include "pgo/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "pgo/error.hpp"

namespace pgo {

std::vector<double> zipf_probabilities(std::size_t n, double skew) {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = 1.0 / std::pow(static_cast<double>(i + 1), skew);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

std::vector<TraceRow> simulate(const SimSpec& spec) {
  if (spec.entries == 0 || spec.windows == 0) throw Error(ErrorKind::Config, "simulate: entries and windows must be positive");
  if (spec.window_ms <= 0 || spec.invocations_per_window <= 0) {
    throw Error(ErrorKind::Config, "simulate: window_ms and invocations_per_window must be positive");
  }
  if (2 * spec.shift_k > spec.entries) throw Error(ErrorKind::Config, "simulate: shift_k must be at most entries/2");

  const auto base = zipf_probabilities(spec.entries, spec.skew);
  // assignment[e] = rank whose probability entry e currently receives
  std::vector<std::size_t> assignment(spec.entries);
  std::iota(assignment.begin(), assignment.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  char name[32];
  std::vector<TraceRow> rows;
  for (std::size_t w = 0; w < spec.windows; ++w) {
    if (spec.shift_windows.contains(w)) {
      for (std::size_t i = 0; i < spec.shift_k; ++i) std::swap(assignment[i], assignment[i + spec.shift_k]);
    }
    for (std::size_t e = 0; e < spec.entries; ++e) {
      const double expected = static_cast<double>(spec.invocations_per_window) * base[assignment[e]];
      const auto count = static_cast<std::int64_t>(std::llround(expected * (1.0 + spec.jitter * unit(rng))));
      if (count <= 0) continue;
      std::snprintf(name, sizeof name, "fn%02zu", e);
      rows.push_back({spec.app_id, name, spec.start_ms + static_cast<std::int64_t>(w) * spec.window_ms, count});
    }
  }
  return rows;
}

std::string render_trace_csv(const std::vector<TraceRow>& rows, bool bucketed) {
  std::string out = trace_csv_header(bucketed) + "\n";
  for (const auto& r : rows) {
    const std::string line = r.app_id + "," + r.entry_point + "," + std::to_string(r.timestamp_ms);
    if (bucketed) {
      out += line + "," + std::to_string(r.count) + "\n";
    } else {
      for (std::int64_t i = 0; i < r.count; ++i) out += line + "\n";
    }
  }
  return out;
}

}  // namespace pgo
