#pragma once

// Fixture store -> report, in-process.

#include <string>
#include <vector>

#include "pgo/detector.hpp"
#include "pgo/profile_model.hpp"
#include "test_support.hpp"

namespace pgo::test {

inline ProfileStore load_fixture_store(const std::string& name) {
  std::vector<RecordBatch> batches;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fixture("profiles/" + name))) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) batches.push_back(read_batch_file(f.string()));
  return validate_and_merge(batches).store;
}

struct Analysis {
  InitNode tree;
  std::vector<LibraryStats> stats;
  Report report;
};

inline Analysis analyze_store(const ProfileStore& store, const DetectorConfig& cfg = {}) {
  Analysis a;
  a.tree = build_init_tree(store.imports);
  a.report.app_id = store.app_id;
  a.report.gate = gate(a.tree, store.invocations, cfg.gate_threshold);
  const auto cct = build_cct(store, PathMapping());
  a.stats = library_stats(cct);
  a.report.findings = detect(a.stats, a.tree, cfg, app_module_roots(a.stats));
  a.report.context = context_rows(a.stats, a.tree, a.report.findings);
  return a;
}

}  // namespace pgo::test
