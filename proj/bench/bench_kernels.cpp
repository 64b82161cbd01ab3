// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "pgo/kernels.hpp"

namespace {

std::vector<pgo::StackSample> make_samples(std::size_t n) {
  std::mt19937_64 rng(11);
  const char* libs[] = {"numpy", "nltk", "requests", "rich", "six", "yaml"};
  std::vector<pgo::StackSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = out[i];
    s.timestamp_ms = static_cast<std::int64_t>(i);
    s.invocation_id = "inv" + std::to_string(i % 16);
    s.entry_point = "handler.main";
    s.frames.push_back({"main", "handler.py", 3});
    const std::size_t depth = 1 + rng() % 10;
    for (std::size_t d = 0; d < depth; ++d) {
      const char* lib = libs[rng() % 6];
      const bool init = rng() % 8 == 0;
      s.frames.push_back({init ? "<module>" : "f" + std::to_string(d),
                          std::string("/var/task/site-packages/") + lib + "/mod" + std::to_string(d % 3) + ".py",
                          static_cast<std::int64_t>(1 + d)});
    }
  }
  return out;
}

std::vector<pgo::kernels::Hit> make_hits(std::size_t n, std::size_t entries, std::int64_t span_ms) {
  std::mt19937_64 rng(5);
  std::vector<pgo::kernels::Hit> hits(n);
  for (auto& h : hits) {
    h.entry = rng() % entries;
    h.timestamp_ms = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span_ms));
  }
  return hits;
}

constexpr std::int64_t kWidth = 43'200'000;
constexpr std::size_t kWindows = 64;
constexpr std::size_t kEntries = 32;

void BM_ClassifyParallel(benchmark::State& st) {
  const auto samples = make_samples(static_cast<std::size_t>(st.range(0)));
  const pgo::PathMapping mapping;
  for (auto _ : st) benchmark::DoNotOptimize(pgo::kernels::classify_samples(samples, mapping));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_ClassifySerial(benchmark::State& st) {
  const auto samples = make_samples(static_cast<std::size_t>(st.range(0)));
  const pgo::PathMapping mapping;
  for (auto _ : st) benchmark::DoNotOptimize(pgo::kernels::serial::classify_samples(samples, mapping));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_WindowCountsParallel(benchmark::State& st) {
  const auto hits = make_hits(static_cast<std::size_t>(st.range(0)), kEntries, kWidth * kWindows);
  for (auto _ : st) benchmark::DoNotOptimize(pgo::kernels::window_counts(hits, 0, kWidth, kWindows, kEntries));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_WindowCountsSerial(benchmark::State& st) {
  const auto hits = make_hits(static_cast<std::size_t>(st.range(0)), kEntries, kWidth * kWindows);
  for (auto _ : st) {
    benchmark::DoNotOptimize(pgo::kernels::serial::window_counts(hits, 0, kWidth, kWindows, kEntries));
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_L1Parallel(benchmark::State& st) {
  const auto windows = static_cast<std::size_t>(st.range(0));
  const auto hits = make_hits(windows * 200, kEntries, kWidth * static_cast<std::int64_t>(windows));
  const auto counts = pgo::kernels::serial::window_counts(hits, 0, kWidth, windows, kEntries);
  for (auto _ : st) benchmark::DoNotOptimize(pgo::kernels::l1_deltas(counts, windows, kEntries));
}

void BM_L1Serial(benchmark::State& st) {
  const auto windows = static_cast<std::size_t>(st.range(0));
  const auto hits = make_hits(windows * 200, kEntries, kWidth * static_cast<std::int64_t>(windows));
  const auto counts = pgo::kernels::serial::window_counts(hits, 0, kWidth, windows, kEntries);
  for (auto _ : st) benchmark::DoNotOptimize(pgo::kernels::serial::l1_deltas(counts, windows, kEntries));
}

}  // namespace

BENCHMARK(BM_ClassifyParallel)->Arg(10'000)->Arg(100'000);
BENCHMARK(BM_ClassifySerial)->Arg(10'000)->Arg(100'000);
BENCHMARK(BM_WindowCountsParallel)->Arg(100'000)->Arg(1'000'000);
BENCHMARK(BM_WindowCountsSerial)->Arg(100'000)->Arg(1'000'000);
BENCHMARK(BM_L1Parallel)->Arg(1'000)->Arg(10'000);
BENCHMARK(BM_L1Serial)->Arg(1'000)->Arg(10'000);

BENCHMARK_MAIN();
