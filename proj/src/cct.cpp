#include "pgo/cct.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

#include "pgo/kernels.hpp"

namespace pgo {

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> segs;
  std::string cur;
  for (char c : path) {
    if (c == '/' || c == '\\') {
      if (!cur.empty() && cur != ".") segs.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur != ".") segs.push_back(std::move(cur));
  return segs;
}

std::string strip_py(const std::string& s) {
  for (std::string_view ext : {".py", ".pyc", ".pyi"}) {
    if (s.size() > ext.size() && s.compare(s.size() - ext.size(), ext.size(), ext) == 0) {
      return s.substr(0, s.size() - ext.size());
    }
  }
  return s;
}

std::string join(const std::vector<std::string>& segs, std::size_t from, char sep) {
  std::string out;
  for (std::size_t i = from; i < segs.size(); ++i) {
    if (i > from) out.push_back(sep);
    out += segs[i];
  }
  return out;
}

std::string dotted_module(const std::vector<std::string>& segs, std::size_t from) {
  std::vector<std::string> parts(segs.begin() + static_cast<std::ptrdiff_t>(from), segs.end());
  if (parts.empty()) return {};
  parts.back() = strip_py(parts.back());
  if (parts.size() > 1 && parts.back() == "__init__") parts.pop_back();
  return join(parts, 0, '.');
}

// Position of the rightmost occurrence of needle in haystack, or npos.
std::size_t find_segments(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::string::npos;
  for (std::size_t i = haystack.size() - needle.size() + 1; i-- > 0;) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) return i;
  }
  return std::string::npos;
}

bool has_prefix(const std::string& module, const std::string& prefix) {
  return module == prefix || (module.size() > prefix.size() && module.compare(0, prefix.size(), prefix) == 0 &&
                              module[prefix.size()] == '.');
}

std::vector<std::string> module_prefixes(const std::string& module) {
  std::vector<std::string> out;
  for (std::size_t pos = module.find('.'); pos != std::string::npos; pos = module.find('.', pos + 1)) {
    out.push_back(module.substr(0, pos));
  }
  if (!module.empty()) out.push_back(module);
  return out;
}

}  // namespace

PathMapping::PathMapping() : PathMapping({"site-packages", "dist-packages"}, "") {}

PathMapping::PathMapping(std::vector<std::string> library_roots, std::string app_root)
    : library_roots_(std::move(library_roots)), app_root_(std::move(app_root)) {
  for (const auto& r : library_roots_) root_segments_.push_back(split_path(r));
  app_segments_ = split_path(app_root_);
}

FrameAttribution PathMapping::attribute(const std::string& file_path) const {
  const auto segs = split_path(file_path);
  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  for (const auto& root : root_segments_) {
    const auto pos = find_segments(segs, root);
    if (pos == std::string::npos || pos + root.size() >= segs.size()) continue;
    if (root.size() > best_len || (root.size() == best_len && pos > best_pos)) {
      best_pos = pos;
      best_len = root.size();
    }
  }
  FrameAttribution a;
  if (best_pos != std::string::npos) {
    const std::size_t lib_at = best_pos + best_len;
    a.library = strip_py(segs[lib_at]);
    a.module = dotted_module(segs, lib_at);
    a.display_path = join(segs, lib_at, '/');
    a.matched = true;
    return a;
  }
  a.library = kAppLibrary;
  const bool relative = !file_path.empty() && file_path.front() != '/';
  if (!app_segments_.empty()) {
    const auto pos = find_segments(segs, app_segments_);
    if (pos != std::string::npos && pos + app_segments_.size() < segs.size()) {
      a.module = dotted_module(segs, pos + app_segments_.size());
      a.display_path = join(segs, pos + app_segments_.size(), '/');
      a.matched = true;
      return a;
    }
  } else if (relative && !segs.empty()) {
    a.module = dotted_module(segs, 0);
    a.display_path = join(segs, 0, '/');
    a.matched = true;
    return a;
  }
  a.module = segs.empty() ? std::string() : strip_py(segs.back());
  a.display_path = file_path;
  a.matched = false;
  return a;
}

Phase classify_phase(const StackSample& sample, const PathMapping& mapping) {
  for (const auto& f : sample.frames) {
    const bool module_body = f.function_name == "<module>";
    if (module_body) {
      const auto a = mapping.attribute(f.file_path);
      if (a.matched && a.library != kAppLibrary) return Phase::Initialization;
    }
    const auto slash = f.file_path.find_last_of("/\\");
    const std::string_view base =
        slash == std::string::npos ? std::string_view(f.file_path) : std::string_view(f.file_path).substr(slash + 1);
    if (base == "__init__.py" && (module_body || f.function_name == "__init__")) return Phase::Initialization;
  }
  return Phase::Runtime;
}

Cct::Cct() {
  CctNode root;
  root.frame = {"<root>", "<root>", 1};
  root.attribution.library = kAppLibrary;
  nodes_.push_back(std::move(root));
}

void Cct::insert(const StackSample& sample, Phase phase, const PathMapping& mapping) {
  std::size_t cur = kRoot;
  for (const auto& f : sample.frames) {
    FrameKey key{f.function_name, f.file_path};
    auto it = nodes_[cur].children.find(key);
    if (it == nodes_[cur].children.end()) {
      CctNode n;
      n.frame = f;
      n.attribution = mapping.attribute(f.file_path);
      if (!n.attribution.matched) unmatched_paths_.insert(f.file_path);
      n.parent = cur;
      nodes_.push_back(std::move(n));
      const std::size_t idx = nodes_.size() - 1;
      nodes_[cur].children.emplace(std::move(key), idx);
      cur = idx;
    } else {
      cur = it->second;
      nodes_[cur].frame.line = std::min(nodes_[cur].frame.line, f.line);
    }
  }
  ++nodes_[cur].exclusive_count;
  if (phase == Phase::Initialization) {
    ++nodes_[cur].init_exclusive_count;
  } else {
    ++runtime_samples_;
  }
  ++total_samples_;
}

void Cct::escalate() {
  for (auto& n : nodes_) n.inclusive_count = n.exclusive_count;
  // Children are always created after their parent, so a reverse sweep sees
  // every subtree total before it is added upward.
  for (std::size_t i = nodes_.size(); i-- > 1;) {
    nodes_[nodes_[i].parent].inclusive_count += nodes_[i].inclusive_count;
  }
}

std::vector<CallFrame> Cct::path_to(std::size_t i) const {
  std::vector<CallFrame> path;
  for (; i != kRoot; i = nodes_[i].parent) path.push_back(nodes_[i].frame);
  std::reverse(path.begin(), path.end());
  return path;
}

bool Cct::same_subtree(std::size_t a, const Cct& other, std::size_t b) const {
  const CctNode& x = nodes_[a];
  const CctNode& y = other.nodes_[b];
  if (x.frame != y.frame || x.exclusive_count != y.exclusive_count || x.inclusive_count != y.inclusive_count ||
      x.init_exclusive_count != y.init_exclusive_count || x.attribution.library != y.attribution.library ||
      x.children.size() != y.children.size()) {
    return false;
  }
  auto ix = x.children.begin();
  auto iy = y.children.begin();
  for (; ix != x.children.end(); ++ix, ++iy) {
    if (ix->first != iy->first || !same_subtree(ix->second, other, iy->second)) return false;
  }
  return true;
}

bool operator==(const Cct& a, const Cct& b) {
  return a.total_samples_ == b.total_samples_ && a.runtime_samples_ == b.runtime_samples_ &&
         a.nodes_.size() == b.nodes_.size() && a.same_subtree(Cct::kRoot, b, Cct::kRoot);
}

Cct build_cct(const ProfileStore& store, const PathMapping& mapping) {
  const auto classes = kernels::classify_samples(store.samples, mapping);
  Cct cct;
  for (std::size_t i = 0; i < store.samples.size(); ++i) cct.insert(store.samples[i], classes[i].phase, mapping);
  cct.escalate();
  return cct;
}

std::string render_call_path(const std::vector<CallFrame>& frames) {
  std::string out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i) out += " → ";
    out += frames[i].file_path + ":" + std::to_string(frames[i].line);
  }
  return out;
}

std::vector<LibraryStats> library_stats(const Cct& cct) {
  const auto& nodes = cct.nodes();
  std::map<LibraryId, LibraryStats> by_lib;
  std::map<LibraryId, std::map<std::string, std::int64_t>> file_counts;

  auto display_path = [&](std::size_t i) {
    std::vector<CallFrame> path;
    for (; i != Cct::kRoot; i = nodes[i].parent) {
      CallFrame f = nodes[i].frame;
      f.file_path = nodes[i].attribution.display_path;
      path.push_back(std::move(f));
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const CctNode& n = nodes[i];
    const LibraryId& lib = n.attribution.library;
    LibraryStats& st = by_lib[lib];
    st.library = lib;
    const std::int64_t runtime = n.exclusive_count - n.init_exclusive_count;
    st.runtime_exclusive_samples += runtime;
    st.init_samples += n.init_exclusive_count;

    const std::string& module = n.attribution.module;
    const CctNode* parent = n.parent == Cct::kRoot ? nullptr : &nodes[n.parent];
    for (const auto& prefix : module_prefixes(module)) {
      st.prefix_runtime_samples[prefix] += runtime;
      const bool entered = parent == nullptr || parent->attribution.library != lib ||
                           !has_prefix(parent->attribution.module, prefix);
      if (entered) st.prefix_call_paths[prefix].push_back({display_path(i), n.inclusive_count});
    }
    if (parent == nullptr || parent->attribution.library != lib) {
      st.call_paths.push_back({display_path(i), n.inclusive_count});
      file_counts[lib][n.attribution.display_path] += n.inclusive_count;
    }
  }

  auto by_count = [](const CallPath& a, const CallPath& b) {
    if (a.count != b.count) return a.count > b.count;
    return render_call_path(a.frames) < render_call_path(b.frames);
  };
  const std::int64_t total_runtime = cct.runtime_samples();
  std::vector<LibraryStats> out;
  for (auto& [lib, st] : by_lib) {
    st.utilization = total_runtime > 0
                         ? static_cast<double>(st.runtime_exclusive_samples) / static_cast<double>(total_runtime)
                         : 0.0;
    std::sort(st.call_paths.begin(), st.call_paths.end(), by_count);
    for (auto& [prefix, paths] : st.prefix_call_paths) std::sort(paths.begin(), paths.end(), by_count);
    std::vector<std::pair<std::string, std::int64_t>> files(file_counts[lib].begin(), file_counts[lib].end());
    std::stable_sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (auto& [file, count] : files) st.files.push_back(file);
    out.push_back(std::move(st));
  }
  return out;
}

double prefix_utilization(const std::vector<LibraryStats>& stats, const std::string& prefix,
                          std::int64_t total_runtime_samples) {
  if (total_runtime_samples <= 0) return 0.0;
  const std::string lib = prefix.substr(0, prefix.find('.'));
  for (const auto& st : stats) {
    if (st.library != lib) continue;
    auto it = st.prefix_runtime_samples.find(prefix);
    if (it == st.prefix_runtime_samples.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(total_runtime_samples);
  }
  return 0.0;
}

}  // namespace pgo
