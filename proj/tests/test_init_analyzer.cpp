#include <doctest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "pgo/error.hpp"
#include "pgo/init_analyzer.hpp"
#include "test_support.hpp"

using namespace pgo;

namespace {

std::vector<ImportTiming> timings(const std::map<std::string, std::int64_t>& m, const std::string& inv = "c") {
  std::vector<ImportTiming> out;
  for (const auto& [mod, t] : m) out.push_back({mod, t, inv});
  return out;
}

void walk(const InitNode& n, const std::function<void(const InitNode&)>& f) {
  f(n);
  for (const auto& c : n.children) walk(c, f);
}

InvocationEvent cold(std::int64_t e2e) { return {0, "h", "c", e2e, true}; }

}  // namespace

TEST_CASE("cumulative sums over the dotted hierarchy") {
  const auto tree = build_init_tree(timings({{"a", 100}, {"a.b", 50}, {"a.b.c", 25}, {"d", 25}}));
  CHECK(tree.name == kInitRoot);
  CHECK(tree.cumulative_time_us == 200);
  CHECK(tree.find("a")->cumulative_time_us == 175);
  CHECK(tree.find("a.b")->cumulative_time_us == 75);
  CHECK(tree.find("a.b.c")->cumulative_time_us == 25);
  CHECK(tree.find("a")->share_of_total == 0.875);
  CHECK(tree.find("missing") == nullptr);
}

TEST_CASE("intermediate packages without timings get zero self time") {
  const auto tree = build_init_tree(timings({{"x.y.z", 10}}));
  REQUIRE(tree.find("x.y") != nullptr);
  CHECK(tree.find("x.y")->self_time_us == 0);
  CHECK(tree.find("x")->cumulative_time_us == 10);
}

TEST_CASE("self times are averaged across invocations") {
  std::vector<ImportTiming> imps{{"m", 100, "c1"}, {"m", 201, "c2"}, {"n", 5, "c1"}};
  const auto tree = build_init_tree(imps);
  CHECK(tree.find("m")->self_time_us == 151);  // 150.5 rounds up
  CHECK(tree.find("n")->self_time_us == 5);
}

TEST_CASE("empty imports") {
  const auto tree = build_init_tree({});
  CHECK(tree.cumulative_time_us == 0);
  CHECK(tree.children.empty());
}

TEST_CASE("random three-level trees match prefix grouping") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 20; ++round) {
    std::map<std::string, std::int64_t> self;
    while (self.size() < 50) {
      std::string name = "l" + std::to_string(rng() % 4);
      const auto depth = rng() % 3;
      for (std::uint64_t d = 0; d < depth; ++d) name += ".p" + std::to_string(rng() % 3);
      self[name] = static_cast<std::int64_t>(rng() % 100000);
    }
    const auto tree = build_init_tree(timings(self));
    const auto oracle_sums = oracle::prefix_sums(self);
    std::int64_t total = 0;
    for (const auto& [m, t] : self) total += t;
    CHECK(tree.cumulative_time_us == total);
    std::size_t nodes = 0;
    walk(tree, [&](const InitNode& n) {
      if (n.name == kInitRoot) return;
      ++nodes;
      CHECK(n.cumulative_time_us == oracle_sums.at(n.name));
      std::int64_t child_sum = 0;
      double share_sum = 0;
      for (const auto& c : n.children) {
        child_sum += c.cumulative_time_us;
        share_sum += c.share_of_total;
      }
      CHECK(n.cumulative_time_us == n.self_time_us + child_sum);
      CHECK(share_sum <= n.share_of_total + 1e-12);
      CHECK(n.share_of_total >= 0.0);
      CHECK(n.share_of_total <= 1.0);
    });
    CHECK(nodes == oracle_sums.size());
  }
}

TEST_CASE("scaling self times scales cumulatives and keeps shares") {
  const std::map<std::string, std::int64_t> base{{"a", 30}, {"a.b", 70}, {"c", 100}};
  std::map<std::string, std::int64_t> scaled;
  for (const auto& [m, t] : base) scaled[m] = t * 7;
  const auto t1 = build_init_tree(timings(base));
  const auto t2 = build_init_tree(timings(scaled));
  CHECK(t2.cumulative_time_us == 7 * t1.cumulative_time_us);
  CHECK(t2.find("a.b")->share_of_total == t1.find("a.b")->share_of_total);
}

TEST_CASE("hierarchy fixture shares and gate") {
  const auto batch = read_batch_file(test::fixture("profiles/hierarchy/batch-00.pgoprof.jsonl"));
  const auto store = validate_and_merge({batch}).store;
  const auto tree = build_init_tree(store.imports);
  CHECK(tree.find("Library1")->share_of_total == doctest::Approx(0.95));
  CHECK(tree.find("Library2")->share_of_total == doctest::Approx(0.05));
  CHECK(tree.find("Library1.pkg.subpkg1")->share_of_total == doctest::Approx(0.85));
  CHECK(tree.find("Library1.pkg.subpkg2")->share_of_total == doctest::Approx(0.10));
  const auto g = gate(tree, store.invocations);
  CHECK(g.init_ratio == doctest::Approx(0.4));
  CHECK(g.passes);
}

TEST_CASE("gate boundaries") {
  const auto tree = build_init_tree(timings({{"a", 1000}}));
  std::vector<InvocationEvent> inv{cold(10000)};
  CHECK_FALSE(gate(tree, inv).passes);  // exactly 0.10
  CHECK(gate(tree, inv).init_ratio == 0.1);
  inv = {cold(14286)};
  CHECK_FALSE(gate(tree, inv).passes);
  inv = {cold(2500)};
  CHECK(gate(tree, inv).passes);
  // Warm invocations are ignored.
  inv = {cold(2500), {0, "h", "w", 1, false}};
  CHECK(gate(tree, inv).init_ratio == 0.4);
  // Mean over cold starts.
  inv = {cold(2000), cold(3000)};
  CHECK(gate(tree, inv).init_ratio == 0.4);
  CHECK(gate(tree, inv, 0.5).threshold == 0.5);
  CHECK_FALSE(gate(tree, inv, 0.5).passes);
}

TEST_CASE("gate without cold starts") {
  const auto tree = build_init_tree(timings({{"a", 1}}));
  std::vector<InvocationEvent> inv{{0, "h", "w", 10, false}};
  try {
    gate(tree, inv);
    FAIL("expected NoColdStartData");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoColdStartData);
  }
}
