#pragma once

// Combines initialization shares with runtime utilization to flag unused and
// infrequently used libraries, and renders the optimization report.

#include <set>
#include <string>
#include <vector>

#include "pgo/cct.hpp"
#include "pgo/init_analyzer.hpp"

namespace pgo {

enum class FindingKind { Unused, Infrequent };

const char* to_string(FindingKind kind);

enum class Granularity { Both, Library, Subpackage };

struct SubpackageShare {
  std::string name;
  double init_share_pct = 0.0;

  friend bool operator==(const SubpackageShare&, const SubpackageShare&) = default;
};

struct Finding {
  LibraryId library;  // top-level library or dotted sub-package ("nltk.sem")
  FindingKind kind = FindingKind::Unused;
  double utilization_pct = 0.0;
  double init_overhead_pct = 0.0;
  std::vector<std::string> files;
  std::vector<CallPath> top_call_paths;
  std::vector<SubpackageShare> flagged_subpackages;

  friend bool operator==(const Finding&, const Finding&) = default;
};

/// A library listed in the report only because some of its sub-packages are
/// flagged; it is not itself a candidate.
struct ContextRow {
  LibraryId library;
  double utilization_pct = 0.0;
  double init_overhead_pct = 0.0;
  std::vector<std::string> files;

  friend bool operator==(const ContextRow&, const ContextRow&) = default;
};

struct DetectorConfig {
  double utilization_threshold = 0.02;
  double min_init_share = 0.05;
  double gate_threshold = 0.10;
  Granularity granularity = Granularity::Both;
  std::size_t max_call_paths = 5;
};

/// Names the application's own top-level modules ("handler" for handler.py);
/// these are never candidates.
std::set<std::string> app_module_roots(const std::vector<LibraryStats>& stats);

/// Findings sorted by init overhead descending, then name. A library is
/// flagged when its init share is at least min_init_share and its runtime
/// utilization is below utilization_threshold; every descendant package or
/// module meeting the same test is reported as its own finding as well.
std::vector<Finding> detect(const std::vector<LibraryStats>& stats, const InitNode& tree,
                            const DetectorConfig& cfg, const std::set<std::string>& app_modules = {});

/// Top-level libraries of sub-package findings that are not findings themselves.
std::vector<ContextRow> context_rows(const std::vector<LibraryStats>& stats, const InitNode& tree,
                                     const std::vector<Finding>& findings);

enum class ReportFormat { Json, Markdown };

ReportFormat parse_report_format(const std::string& name);  // throws UnknownFormat

struct Report {
  std::string app_id;
  GateResult gate;
  std::vector<Finding> findings;
  std::vector<ContextRow> context;
  std::vector<std::string> warnings;

  friend bool operator==(const Report& a, const Report& b) {
    return a.app_id == b.app_id && a.gate.init_ratio == b.gate.init_ratio &&
           a.gate.threshold == b.gate.threshold && a.gate.passes == b.gate.passes && a.findings == b.findings &&
           a.context == b.context &&
           a.warnings == b.warnings;
  }
};

std::string render_report(const Report& report, ReportFormat format);
std::string render_report(const Report& report, const std::string& format);

/// Inverse of the JSON rendering.
Report parse_report_json(const std::string& text);

}  // namespace pgo
