#pragma once

// Calling context tree over stack samples, library attribution of frames and
// the runtime utilization metric.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pgo/profile_model.hpp"

namespace pgo {

/// Top-level package name; the application's own code is "app".
using LibraryId = std::string;
inline const LibraryId kAppLibrary = "app";

enum class Phase { Initialization, Runtime };

struct FrameAttribution {
  LibraryId library;
  std::string module;        // dotted module name, e.g. "nltk.sem" for nltk/sem/__init__.py
  std::string display_path;  // path relative to the library root or app root
  bool matched = false;      // false when the file fell back to "app" without matching a root
};

/// Maps runtime file paths onto libraries. Library roots are path markers
/// (one or more segments, e.g. "site-packages" or "opt/vendor"); the library
/// is the first segment after the longest matching marker.
class PathMapping {
 public:
  PathMapping();
  PathMapping(std::vector<std::string> library_roots, std::string app_root);

  FrameAttribution attribute(const std::string& file_path) const;
  LibraryId attribute_library(const CallFrame& frame) const { return attribute(frame.file_path).library; }

  const std::vector<std::string>& library_roots() const { return library_roots_; }
  const std::string& app_root() const { return app_root_; }

 private:
  std::vector<std::string> library_roots_;
  std::vector<std::vector<std::string>> root_segments_;
  std::string app_root_;
  std::vector<std::string> app_segments_;
};

Phase classify_phase(const StackSample& sample, const PathMapping& mapping);

struct FrameKey {
  std::string function_name;
  std::string file_path;
  auto operator<=>(const FrameKey&) const = default;
};

struct CctNode {
  CallFrame frame;  // line = minimum line observed in this context
  FrameAttribution attribution;
  std::map<FrameKey, std::size_t> children;  // indices into Cct::nodes()
  std::size_t parent = 0;
  std::int64_t exclusive_count = 0;
  std::int64_t inclusive_count = 0;
  std::int64_t init_exclusive_count = 0;
};

class Cct {
 public:
  static constexpr std::size_t kRoot = 0;

  Cct();

  /// Inserts one root-first path; the leaf context gets the exclusive count.
  void insert(const StackSample& sample, Phase phase, const PathMapping& mapping);

  /// Recomputes inclusive counts bottom-up: inclusive = exclusive + sum(children inclusive).
  void escalate();

  const std::vector<CctNode>& nodes() const { return nodes_; }
  const CctNode& root() const { return nodes_[kRoot]; }
  const CctNode& node(std::size_t i) const { return nodes_[i]; }
  std::int64_t total_samples() const { return total_samples_; }
  std::int64_t runtime_samples() const { return runtime_samples_; }

  /// Root-first frames from the first real frame down to node i.
  std::vector<CallFrame> path_to(std::size_t i) const;

  /// Distinct file paths that matched no configured root.
  const std::set<std::string>& unmatched_paths() const { return unmatched_paths_; }

  /// Structural equality independent of node numbering.
  friend bool operator==(const Cct& a, const Cct& b);

 private:
  bool same_subtree(std::size_t a, const Cct& other, std::size_t b) const;

  std::vector<CctNode> nodes_;
  std::int64_t total_samples_ = 0;
  std::int64_t runtime_samples_ = 0;
  std::set<std::string> unmatched_paths_;
};

/// Builds and escalates the CCT. Phases come from the parallel classification kernel.
Cct build_cct(const ProfileStore& store, const PathMapping& mapping);

struct CallPath {
  std::vector<CallFrame> frames;  // file paths are display paths
  std::int64_t count = 0;

  friend bool operator==(const CallPath&, const CallPath&) = default;
};

struct LibraryStats {
  LibraryId library;
  std::int64_t runtime_exclusive_samples = 0;
  std::int64_t init_samples = 0;
  double utilization = 0.0;
  std::vector<CallPath> call_paths;  // root-to-library-entry, by count descending

  // Per dotted prefix within the library ("nltk", "nltk.sem", "nltk.sem.logic"):
  // runtime exclusive samples and entry call paths.
  std::map<std::string, std::int64_t> prefix_runtime_samples;
  std::map<std::string, std::vector<CallPath>> prefix_call_paths;
  std::vector<std::string> files;  // display paths of entry nodes, most sampled first
};

/// Utilization per library from exclusive runtime counts. When there are no
/// runtime samples every utilization is 0.
std::vector<LibraryStats> library_stats(const Cct& cct);

/// Runtime utilization of a dotted prefix ("nltk.sem"), 0 when unseen.
double prefix_utilization(const std::vector<LibraryStats>& stats, const std::string& prefix,
                          std::int64_t total_runtime_samples);

std::string render_call_path(const std::vector<CallFrame>& frames);

}  // namespace pgo
