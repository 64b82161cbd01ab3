// One PASS/FAIL line per acceptance criterion. Exits non-zero on any FAIL.

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "corpus.hpp"
#include "oracles.hpp"
#include "pgo/adaptive.hpp"
#include "pgo/cct.hpp"
#include "pgo/collector.hpp"
#include "pgo/digest.hpp"
#include "pgo/simulate.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

using namespace pgo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, const char* f = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome cct_random() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto samples = oracle::random_samples(1000, 12, 8, 2024);
  ProfileStore store;
  store.samples = samples;
  const auto cct = build_cct(store, PathMapping());
  const auto stats = library_stats(cct);
  const double elapsed = seconds_since(t0);

  o.require(cct.root().inclusive_count == 1000, "root inclusive count != 1000");
  for (const auto& n : cct.nodes()) {
    std::int64_t sum = n.exclusive_count;
    for (const auto& [k, idx] : n.children) sum += cct.node(idx).inclusive_count;
    o.require(sum == n.inclusive_count, "inclusive != exclusive + children at a node");
  }
  const auto flat = oracle::flat_runtime_counts(samples);
  std::int64_t runtime = 0;
  for (const auto& [lib, n] : flat) runtime += n;
  double total = 0;
  for (const auto& st : stats) {
    const auto it = flat.find(st.library);
    const std::int64_t expect = it == flat.end() ? 0 : it->second;
    o.require(st.runtime_exclusive_samples == expect, st.library + " runtime samples differ from the flat count");
    total += st.utilization;
  }
  o.require(std::abs(total - 1.0) < 1e-9, "utilization does not sum to 1");
  o.require(elapsed < 1.0, "took " + fmt(elapsed, "%.3f") + " s");
  if (o.ok) o.detail = std::to_string(stats.size()) + " libraries, " + fmt(elapsed * 1000, "%.1f") + " ms";
  return o;
}

Outcome depgraph_unused() {
  Outcome o;
  const auto a = test::analyze_store(test::load_fixture_store("depgraph"));
  const auto lib4 = std::find_if(a.stats.begin(), a.stats.end(), [](const LibraryStats& s) { return s.library == "lib4"; });
  o.require(lib4 != a.stats.end(), "lib4 missing from stats");
  if (!o.ok) return o;
  o.require(lib4->init_samples == 80 && lib4->runtime_exclusive_samples == 0, "lib4 samples not init-only");
  o.require(a.report.findings.size() == 1 && a.report.findings[0].library == "lib4" &&
                a.report.findings[0].kind == FindingKind::Unused,
            "lib4 is not the single unused finding");
  if (o.ok) o.detail = "lib4 unused, 80 init samples, 0 runtime";
  return o;
}

void walk(const InitNode& n, const std::function<void(const InitNode&)>& f) {
  f(n);
  for (const auto& c : n.children) walk(c, f);
}

Outcome init_tree() {
  Outcome o;
  std::mt19937_64 rng(77);
  for (int round = 0; round < 50 && o.ok; ++round) {
    std::map<std::string, std::int64_t> self;
    while (self.size() < 40) {
      std::string name = "m" + std::to_string(rng() % 5);
      const auto depth = rng() % 4;
      for (std::uint64_t d = 0; d < depth; ++d) name += ".s" + std::to_string(rng() % 3);
      self[name] = static_cast<std::int64_t>(rng() % 50000);
    }
    std::vector<ImportTiming> imps;
    for (const auto& [m, t] : self) imps.push_back({m, t, "c"});
    const auto tree = build_init_tree(imps);
    const auto sums = oracle::prefix_sums(self);
    walk(tree, [&](const InitNode& n) {
      if (n.name == kInitRoot) return;
      o.require(n.cumulative_time_us == sums.at(n.name), "cumulative time differs at " + n.name);
      const double share = tree.cumulative_time_us ? static_cast<double>(sums.at(n.name)) /
                                                         static_cast<double>(tree.cumulative_time_us)
                                                   : 0.0;
      o.require(std::abs(n.share_of_total - share) < 1e-12, "share differs at " + n.name);
    });
  }
  const auto store = test::load_fixture_store("hierarchy");
  const auto tree = build_init_tree(store.imports);
  auto share = [&](const char* m) { return tree.find(m) ? tree.find(m)->share_of_total : -1.0; };
  o.require(std::abs(share("Library1") - 0.95) < 1e-9 && std::abs(share("Library2") - 0.05) < 1e-9 &&
                std::abs(share("Library1.pkg.subpkg1") - 0.85) < 1e-9 &&
                std::abs(share("Library1.pkg.subpkg2") - 0.10) < 1e-9,
            "hierarchy shares differ");
  const auto g = gate(tree, store.invocations);
  o.require(std::abs(g.init_ratio - 0.4) < 1e-9 && g.passes, "hierarchy gate ratio " + fmt(g.init_ratio));
  if (o.ok) o.detail = "50 random trees, hierarchy shares 95/5/85/10, ratio 0.40 passes";
  return o;
}

Outcome report_fidelity() {
  Outcome o;
  const auto rsa = render_report(test::analyze_store(test::load_fixture_store("rsa")).report, ReportFormat::Markdown);
  const auto cve = render_report(test::analyze_store(test::load_fixture_store("cve")).report, ReportFormat::Markdown);
  for (const char* row : {"| - | nltk | 5.33 | 69.93 | nltk/__init__.py |",
                          "| + | nltk.sem | 0.00 | 8.25 | nltk/sem/__init__.py |",
                          "| + | nltk.stem | 0.00 | 6.50 | nltk/stem/__init__.py |",
                          "| + | nltk.parse | 0.00 | 6.00 | nltk/parse/__init__.py |",
                          "| + | nltk.tag | 0.00 | 5.25 | nltk/tag/__init__.py |",
                          "handler.py:2 → nltk/__init__.py:147 → nltk/sem/__init__.py:44"}) {
    o.require(rsa.find(row) != std::string::npos, std::string("R-SA report lacks: ") + row);
  }
  for (const char* row : {"| + | xmlschema | 0.78 | 8.27 | xmlschema/__init__.py |",
                          "| + | elementpath | 1.48 | 8.17 |",
                          "handler.py:11 → cve_bin_tool/cli.py:71 → cve_bin_tool/sbom_detection.py:8 → "
                          "cve_bin_tool/validator.py:11"}) {
    o.require(cve.find(row) != std::string::npos, std::string("CVE report lacks: ") + row);
  }
  if (o.ok) o.detail = "R-SA and CVE rows and call paths match";
  return o;
}

Outcome rewriter_corpus() {
  Outcome o;
  const auto cases = test::corpus_cases();
  o.require(cases.size() >= 10, "only " + std::to_string(cases.size()) + " cases");
  std::size_t passed = 0;
  for (const auto& c : cases) {
    const auto r = test::run_corpus_case(c);
    if (r.ok()) {
      ++passed;
    } else {
      o.require(false, r.name + ": " + r.problems.front());
    }
  }
  if (o.ok) o.detail = std::to_string(passed) + "/" + std::to_string(cases.size()) + " programs equivalent";
  return o;
}

Outcome adaptive() {
  Outcome o;
  SimSpec spec;
  spec.windows = 30;
  spec.window_ms = 12LL * 3600 * 1000;
  spec.shift_windows = {6, 19};
  const auto rows = simulate(spec);
  std::vector<std::map<std::string, std::int64_t>> w(spec.windows);
  for (const auto& r : rows) w[static_cast<std::size_t>((r.timestamp_ms - spec.start_ms) / spec.window_ms)][r.entry_point] += r.count;
  std::vector<std::size_t> expect;
  for (std::size_t k = 1; k < w.size(); ++k) {
    if (oracle::l1(w[k - 1], w[k]) > 0.002) expect.push_back(k);
  }
  const auto got = run_trace(rows, {spec.window_ms, 0.002}).fired_windows();
  o.require(expect == std::vector<std::size_t>{6, 19}, "oracle does not fire at {6, 19}");
  o.require(got == expect, "controller fired " + std::to_string(got.size()) + " time(s), not at {6, 19}");

  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000 && o.ok; ++i) {
    Window a;
    Window b;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int e = 0; e < n; ++e) {
      a.counts["e" + std::to_string(e)] = static_cast<std::int64_t>(rng() % 1000);
      b.counts["e" + std::to_string(e)] = static_cast<std::int64_t>(rng() % 1000);
    }
    const auto d = delta(a, b, 0.002);
    const double ref = oracle::l1(a.counts, b.counts);
    if (ref < 0) {
      o.require(d.empty_window && !d.fired, "empty window fired");
      continue;
    }
    o.require(d.total_delta >= 0 && d.total_delta <= 2.0 + 1e-12, "delta out of [0, 2]");
    o.require(std::abs(d.total_delta - ref) < 1e-9, "delta differs from the oracle");
  }
  if (o.ok) o.detail = "fired at windows 6 and 19; 10000 random pairs within [0, 2]";
  return o;
}

double import_seconds(const fs::path& app) {
  const auto r = test::run("cd " + test::quote(app.string()) + " && PYTHONPATH=site-packages " + PGO_PYTHON +
                           " -B -c " +
                           test::quote("import sys, time; sys.path.insert(0, '.'); t = time.perf_counter(); "
                                       "import handler; print(time.perf_counter() - t)"));
  if (r.status != 0) return -1;
  return std::stod(r.out);
}

std::string call(const fs::path& app, const std::string& entry) {
  const auto r = test::run("cd " + test::quote(app.string()) + " && PYTHONPATH=site-packages " + PGO_PYTHON +
                           " -B -c " +
                           test::quote("import sys; sys.path.insert(0, '.'); import handler; print(repr(handler." +
                                       entry + "({'k': [1, 2]})))"));
  return r.status == 0 ? r.out : "<failed>";
}

Outcome end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  test::TempDir dir;
  const fs::path app = dir / "app";
  fs::copy(test::fixture("demo_app"), app, fs::copy_options::recursive);
  const double before = import_seconds(app);
  const std::string hot_before = call(app, "hot");
  const std::string cold_before = call(app, "cold");

  const auto ing = test::pgo_cli("ingest " + test::quote(test::fixture("profiles/demo").string()) + " --out " +
                                 test::quote((dir / "runs").string()));
  o.require(ing.status == 0, "pgo ingest failed");
  if (!o.ok) return o;
  const std::string store = ing.out.substr(0, ing.out.find('\n'));
  o.require(test::pgo_cli("analyze " + test::quote(store) + " --out " + test::quote((dir / "a").string())).status == 0,
            "pgo analyze failed");
  const auto report_path = dir / "a" / "report.json";
  o.require(test::pgo_cli("optimize " + test::quote(report_path.string()) + " " + test::quote(app.string())).status == 0,
            "pgo optimize failed");
  if (!o.ok) return o;

  const auto report = parse_report_json(test::slurp(report_path));
  double share = 0;
  for (const auto& f : report.findings) {
    if (f.library == "slowlib") share = f.init_overhead_pct / 100.0;
  }
  o.require(share > 0, "slowlib was not flagged");
  const double after = import_seconds(app);
  o.require(before > 0 && after >= 0, "import timing failed");
  const double drop = before - after;
  o.require(drop >= 0.8 * share * before,
            "import time " + fmt(before, "%.3f") + " s -> " + fmt(after, "%.3f") + " s, needed a drop of " +
                fmt(0.8 * share * before, "%.3f") + " s");
  o.require(call(app, "hot") == hot_before, "hot entry output changed");
  o.require(call(app, "cold") == cold_before, "cold entry output changed");
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 30.0, "took " + fmt(elapsed, "%.1f") + " s");
  if (o.ok) {
    o.detail = "import " + fmt(before * 1000, "%.0f") + " ms -> " + fmt(after * 1000, "%.0f") + " ms, " +
               fmt(elapsed, "%.1f") + " s total";
  }
  return o;
}

Outcome collector() {
  Outcome o;
  test::TempDir dir;
  const fs::path out = dir / "batches";
  CollectorServer server(out);
  const int port = server.bind("127.0.0.1", 0);
  server.start();

  auto body = [](int t, int i) {
    return R"({"k":"sample","ts":)" + std::to_string(t * 1000 + i) + R"(,"inv":"w)" + std::to_string(t) +
           R"(","ep":"main","fr":[["main","handler.py",)" + std::to_string(i + 1) + "]]}\n" +
           R"({"k":"invk","ts":0,"inv":"w)" + std::to_string(t) + R"(","ep":"main","e2e_us":5,"cold":false})" + "\n";
  };
  std::atomic<int> accepted_posts{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      httplib::Client cli("127.0.0.1", port);
      for (int i = 0; i < 50; ++i) {
        auto r = cli.Post("/v1/batch", body(t, i), "application/x-ndjson");
        if (r && r->status == 202) ++accepted_posts;
      }
    });
  }
  for (auto& th : threads) th.join();
  {
    httplib::Client cli("127.0.0.1", port);
    for (int i = 0; i < 10; ++i) cli.Post("/v1/batch", body(3, i), "application/x-ndjson");
  }
  server.stop();

  o.require(accepted_posts == 400, std::to_string(accepted_posts.load()) + " of 400 posts accepted");
  std::set<std::string> digests;
  std::size_t others = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    const auto name = e.path().filename().string();
    if (!name.ends_with(kBatchSuffix)) {
      ++others;
      continue;
    }
    digests.insert(name.substr(0, name.size() - kBatchSuffix.size()));
    try {
      o.require(read_batch_file(e.path().string()).size() == 2, name + " lost records");
    } catch (const std::exception& ex) {
      o.require(false, name + " does not validate: " + ex.what());
    }
  }
  std::set<std::string> expect;
  for (int t = 0; t < 8; ++t) {
    for (int i = 0; i < 50; ++i) {
      std::string canon;
      std::istringstream lines(body(t, i));
      for (std::string line; std::getline(lines, line);) canon += serialize_record(parse_record(line)) + "\n";
      expect.insert(sha256_hex(canon));
    }
  }
  o.require(digests == expect, std::to_string(digests.size()) + " stored digests, expected 400 matching");
  o.require(others == 0, "temporary files left behind");
  if (o.ok) o.detail = "400 batches from 8 threads stored once each";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cct-random-1000", cct_random},
      {"unused-library-in-graph", depgraph_unused},
      {"init-tree-and-gate", init_tree},
      {"report-fidelity", report_fidelity},
      {"rewriter-corpus", rewriter_corpus},
      {"adaptive-trigger", adaptive},
      {"end-to-end-import-time", end_to_end},
      {"collector-concurrency", collector},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += !o.ok;
  }
  return failed == 0 ? 0 : 1;
}
