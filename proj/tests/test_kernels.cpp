#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pgo/kernels.hpp"

using namespace pgo;

TEST_CASE("parallel classification matches the serial reference") {
  const auto samples = oracle::random_samples(5000, 12, 8, 77);
  const PathMapping m;
  const auto par = kernels::classify_samples(samples, m);
  const auto ser = kernels::serial::classify_samples(samples, m);
  CHECK(par == ser);
  REQUIRE(par.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK((par[i].phase == Phase::Initialization) == oracle::is_init(samples[i]));
    CHECK(par[i].leaf_library == oracle::library_of(samples[i].frames.back().file_path));
  }
}

TEST_CASE("window counts: parallel, serial and a direct count agree") {
  std::mt19937_64 rng(5);
  std::vector<kernels::Hit> hits;
  for (int i = 0; i < 20000; ++i) {
    hits.push_back({rng() % 6, static_cast<std::int64_t>(rng() % 1200) - 100, static_cast<std::int64_t>(1 + rng() % 3)});
  }
  const auto par = kernels::window_counts(hits, 0, 100, 10, 6);
  const auto ser = kernels::serial::window_counts(hits, 0, 100, 10, 6);
  CHECK(par == ser);
  std::vector<std::int64_t> direct(60, 0);
  for (const auto& h : hits) {
    if (h.timestamp_ms < 0 || h.timestamp_ms >= 1000) continue;
    direct[static_cast<std::size_t>(h.timestamp_ms / 100) * 6 + h.entry] += h.weight;
  }
  CHECK(par == direct);
}

TEST_CASE("l1 deltas: parallel, serial and oracle agree") {
  std::mt19937_64 rng(8);
  const std::size_t windows = 40;
  const std::size_t entries = 7;
  std::vector<std::int64_t> counts(windows * entries);
  for (auto& c : counts) c = static_cast<std::int64_t>(rng() % 50);
  for (std::size_t e = 0; e < entries; ++e) counts[12 * entries + e] = 0;  // one silent window
  const auto par = kernels::l1_deltas(counts, windows, entries);
  const auto ser = kernels::serial::l1_deltas(counts, windows, entries);
  REQUIRE(par.size() == windows - 1);
  CHECK(par == ser);
  for (std::size_t k = 1; k < windows; ++k) {
    std::map<std::string, std::int64_t> a;
    std::map<std::string, std::int64_t> b;
    for (std::size_t e = 0; e < entries; ++e) {
      if (counts[(k - 1) * entries + e]) a[std::to_string(e)] = counts[(k - 1) * entries + e];
      if (counts[k * entries + e]) b[std::to_string(e)] = counts[k * entries + e];
    }
    const double expect = oracle::l1(a, b);
    if (expect < 0) {
      CHECK(par[k - 1] < 0);
    } else {
      CHECK(par[k - 1] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(par[11] < 0);
  CHECK(par[12] < 0);
}

TEST_CASE("kernels on empty input") {
  CHECK(kernels::classify_samples({}, PathMapping()).empty());
  CHECK(kernels::window_counts({}, 0, 10, 3, 2) == std::vector<std::int64_t>(6, 0));
  CHECK(kernels::l1_deltas({}, 0, 0).empty());
}
