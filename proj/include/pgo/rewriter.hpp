#pragma once

// Rewrites flagged module-level imports of a Python source file into
// function-scoped imports. Edits are line-based patches over the original
// text; removed statements stay in the file as marker comments.

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pgo {

inline constexpr std::string_view kDeferredMarker = "# [pgo-deferred] ";

enum class ImportKind { Plain, From };

struct BoundName {
  std::string binding;
  std::string refers_to;  // dotted module, or module.attribute for from-imports

  friend bool operator==(const BoundName&, const BoundName&) = default;
};

struct GlobalImport {
  std::string source_file;
  std::pair<int, int> line_span;  // 1-based, inclusive
  ImportKind kind = ImportKind::Plain;
  std::string target_module;  // leading dots kept for relative imports
  std::vector<BoundName> bound_names;
  bool star = false;  // unsafe: bound_names unknown

  friend bool operator==(const GlobalImport&, const GlobalImport&) = default;
};

/// Module-level, unguarded imports only. A plain import naming several
/// modules yields one entry per module. Throws Error(ParseError).
std::vector<GlobalImport> scan_imports(std::string_view source, const std::string& file = {});

struct Insertion {
  std::string scope;  // qualified function name
  int before_line = 0;
  std::string text;  // full line including indentation, no terminator

  friend bool operator==(const Insertion&, const Insertion&) = default;
};

struct Skip {
  std::string reason;
  std::string detail;

  friend bool operator==(const Skip&, const Skip&) = default;
};

struct RewritePlan {
  std::string file;
  std::string source_digest;
  std::vector<std::pair<int, int>> removals;
  std::vector<Insertion> insertions;  // sorted by before_line, stable
  std::vector<Skip> skipped;

  bool empty() const { return removals.empty() && insertions.empty(); }
};

struct PlanOptions {
  std::set<std::string> flagged;   // dotted module names; descendants match too
  std::set<std::string> denylist;  // never deferred; descendants match too
  std::string file;
};

RewritePlan plan(std::string_view source, const PlanOptions& opts);

/// Throws Error(StaleSource) when the source digest differs from the plan's.
std::string apply(std::string_view source, const RewritePlan& plan);

struct VerificationReport {
  bool ok = true;
  std::vector<std::string> failures;
};

/// Runs every check and reports failures without throwing (parse failures of
/// either input are reported as failures too).
VerificationReport check(std::string_view original, std::string_view rewritten);

/// Like check, but throws Error(VerificationFailure) listing the violated
/// checks.
VerificationReport verify(std::string_view original, std::string_view rewritten);

/// {"file","removed":[lines],"inserted":[{"scope","line"}],"skipped":[{"reason","detail"}]}
std::string patch_summary_json(const RewritePlan& plan);

/// Full plans, including the source digest, for a later apply.
std::string plans_to_json(const std::vector<RewritePlan>& plans);
std::vector<RewritePlan> plans_from_json(std::string_view text);  // throws ParseError

/// Unified diff of apply(source, plan) against source.
std::string unified_diff(std::string_view source, const RewritePlan& plan, const std::string& path);

}  // namespace pgo
