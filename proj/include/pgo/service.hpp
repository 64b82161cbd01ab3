#pragma once

// Commands behind the `pgo` CLI. Each writes plain files and returns what it
// did; printing and exit codes are left to the caller.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pgo/adaptive.hpp"
#include "pgo/config.hpp"
#include "pgo/detector.hpp"
#include "pgo/error.hpp"
#include "pgo/profile_model.hpp"
#include "pgo/rewriter.hpp"
#include "pgo/simulate.hpp"

namespace pgo {

namespace fs = std::filesystem;

/// 1 usage/config error, 2 data error, 3 verification failure.
int exit_code(ErrorKind kind);

struct ArtifactDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string run_id;
  std::string command;
  std::string created_at;  // UTC, ISO 8601
  std::vector<ArtifactDigest> inputs;
  std::string config_digest;
  std::vector<ArtifactDigest> artifacts;

  std::string to_json() const;
};

void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);  // throws Io

struct IngestResult {
  fs::path run_dir;
  fs::path store_path;
  std::string app_id;
  std::size_t batches = 0;
  std::size_t records = 0;
  ValidationReport validation;
  RunManifest manifest;
};

/// Inputs are batch files or directories of `*.pgoprof.jsonl`; with no inputs
/// the configured collector directory is read. Writes
/// `<out_root>/<app>/<run_id>/store.pgoprof.jsonl` and `manifest.json`.
IngestResult cmd_ingest(const std::vector<fs::path>& inputs, const fs::path& out_root, const Config& cfg);

struct AnalyzeResult {
  Report report;
  fs::path json_path;
  fs::path markdown_path;
  RunManifest manifest;
};

/// Init tree, gate, and when the gate passes CCT, utilization and detection.
/// Writes report.json, report.md and manifest.json into out_dir.
AnalyzeResult cmd_analyze(const fs::path& store_path, const fs::path& out_dir, const Config& cfg);

std::string cmd_report(const fs::path& report_json, const std::string& format);

struct FileOutcome {
  std::string file;  // relative to the source root
  RewritePlan plan;
  bool applied = false;
  VerificationReport verification;
  std::string diff;  // dry runs only
};

struct OptimizeResult {
  std::vector<FileOutcome> files;
  std::vector<std::string> warnings;
  bool all_verified = true;

  std::string summary_json() const;
};

struct OptimizeOptions {
  bool dry_run = false;
  std::optional<fs::path> plans_in;   // apply these plans instead of planning
  std::optional<fs::path> plans_out;  // save the computed plans
};

/// Rewrites every `.py` file under source_root for the report's findings.
/// Files inside a flagged library's own package are left alone. Throws
/// StaleSource when a saved plan no longer matches its file.
OptimizeResult cmd_optimize(const fs::path& report_json, const fs::path& source_root, const Config& cfg,
                            const OptimizeOptions& opts);

/// Module names to defer, from a report.
std::set<std::string> flagged_modules(const Report& report);

struct WatchOptions {
  fs::path trace;
  fs::path out_dir;
  bool auto_optimize = false;
  std::optional<fs::path> store;        // for --auto
  std::optional<fs::path> source_root;  // for --auto
  bool follow = false;
  std::int64_t idle_timeout_ms = -1;  // follow mode: stop after this long without new rows; <0 never
};

struct WatchResult {
  std::vector<std::pair<std::string, TriggerDecision>> fired;  // (app, decision)
  std::size_t malformed_rows = 0;
  std::size_t late_rows = 0;
  std::size_t optimizations = 0;
  fs::path triggers_path;
};

/// Replays (or follows) a trace and appends one record per fired decision to
/// `<out_dir>/triggers.jsonl`, which is created even when nothing fires.
WatchResult cmd_watch(const WatchOptions& opts, const Config& cfg);

std::string cmd_simulate(const SimSpec& spec, bool bucketed);

}  // namespace pgo
