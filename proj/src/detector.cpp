#include "pgo/detector.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "pgo/error.hpp"

namespace pgo {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

const LibraryStats* find_stats(const std::vector<LibraryStats>& stats, const std::string& lib) {
  for (const auto& st : stats) {
    if (st.library == lib) return &st;
  }
  return nullptr;
}

void collect_descendants(const InitNode& n, std::vector<const InitNode*>& out) {
  for (const auto& c : n.children) {
    out.push_back(&c);
    collect_descendants(c, out);
  }
}

FindingKind kind_for(double utilization) {
  return utilization == 0.0 ? FindingKind::Unused : FindingKind::Infrequent;
}

std::vector<CallPath> top(const std::vector<CallPath>& paths, std::size_t n) {
  return {paths.begin(), paths.begin() + static_cast<std::ptrdiff_t>(std::min(n, paths.size()))};
}

std::vector<std::string> entry_files(const std::vector<CallPath>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (p.frames.empty()) continue;
    const auto& f = p.frames.back().file_path;
    if (std::find(files.begin(), files.end(), f) == files.end()) files.push_back(f);
  }
  return files;
}

ordered_json frame_json(const CallFrame& f) { return ordered_json::array({f.function_name, f.file_path, f.line}); }

}  // namespace

const char* to_string(FindingKind kind) { return kind == FindingKind::Unused ? "unused" : "infrequent"; }

std::set<std::string> app_module_roots(const std::vector<LibraryStats>& stats) {
  std::set<std::string> roots;
  if (const auto* app = find_stats(stats, kAppLibrary)) {
    for (const auto& [prefix, count] : app->prefix_runtime_samples) {
      if (prefix.find('.') == std::string::npos) roots.insert(prefix);
    }
  }
  return roots;
}

std::vector<Finding> detect(const std::vector<LibraryStats>& stats, const InitNode& tree, const DetectorConfig& cfg,
                            const std::set<std::string>& app_modules) {
  std::int64_t total_runtime = 0;
  for (const auto& st : stats) total_runtime += st.runtime_exclusive_samples;

  std::vector<Finding> findings;
  for (const auto& lib_node : tree.children) {
    const std::string& lib = lib_node.name;
    if (lib == kAppLibrary || app_modules.contains(lib)) continue;
    const LibraryStats* st = find_stats(stats, lib);

    std::vector<const InitNode*> descendants;
    collect_descendants(lib_node, descendants);
    std::vector<std::pair<const InitNode*, double>> flagged_subs;
    for (const InitNode* d : descendants) {
      const double u = prefix_utilization(stats, d->name, total_runtime);
      if (d->share_of_total >= cfg.min_init_share && u < cfg.utilization_threshold) flagged_subs.emplace_back(d, u);
    }

    const double util = st ? st->utilization : 0.0;
    if (cfg.granularity != Granularity::Subpackage && lib_node.share_of_total >= cfg.min_init_share &&
        util < cfg.utilization_threshold) {
      Finding f;
      f.library = lib;
      f.kind = kind_for(util);
      f.utilization_pct = util * 100.0;
      f.init_overhead_pct = lib_node.share_of_total * 100.0;
      if (st) {
        f.files = st->files;
        f.top_call_paths = top(st->call_paths, cfg.max_call_paths);
      }
      for (const auto& [d, u] : flagged_subs) f.flagged_subpackages.push_back({d->name, d->share_of_total * 100.0});
      findings.push_back(std::move(f));
    }
    if (cfg.granularity == Granularity::Library) continue;
    for (const auto& [d, u] : flagged_subs) {
      Finding f;
      f.library = d->name;
      f.kind = kind_for(u);
      f.utilization_pct = u * 100.0;
      f.init_overhead_pct = d->share_of_total * 100.0;
      if (st) {
        auto it = st->prefix_call_paths.find(d->name);
        if (it != st->prefix_call_paths.end()) {
          f.top_call_paths = top(it->second, cfg.max_call_paths);
          f.files = entry_files(it->second);
        }
      }
      for (const auto& [sub, su] : flagged_subs) {
        if (sub->name.size() > d->name.size() && sub->name.compare(0, d->name.size(), d->name) == 0 &&
            sub->name[d->name.size()] == '.') {
          f.flagged_subpackages.push_back({sub->name, sub->share_of_total * 100.0});
        }
      }
      findings.push_back(std::move(f));
    }
  }
  std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    if (a.init_overhead_pct != b.init_overhead_pct) return a.init_overhead_pct > b.init_overhead_pct;
    return a.library < b.library;
  });
  return findings;
}

std::vector<ContextRow> context_rows(const std::vector<LibraryStats>& stats, const InitNode& tree,
                                     const std::vector<Finding>& findings) {
  std::set<std::string> flagged;
  for (const auto& f : findings) flagged.insert(f.library);
  std::set<std::string> parents;
  for (const auto& f : findings) {
    const auto dot = f.library.find('.');
    if (dot != std::string::npos && !flagged.contains(f.library.substr(0, dot))) parents.insert(f.library.substr(0, dot));
  }
  std::vector<ContextRow> rows;
  for (const auto& lib : parents) {
    ContextRow row;
    row.library = lib;
    if (const auto* st = find_stats(stats, lib)) {
      row.utilization_pct = st->utilization * 100.0;
      row.files = st->files;
    }
    if (const auto* node = tree.find(lib)) row.init_overhead_pct = node->share_of_total * 100.0;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const ContextRow& a, const ContextRow& b) {
    if (a.init_overhead_pct != b.init_overhead_pct) return a.init_overhead_pct > b.init_overhead_pct;
    return a.library < b.library;
  });
  return rows;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  throw Error(ErrorKind::UnknownFormat, "unknown report format '" + name + "'");
}

namespace {

std::string render_json(const Report& r) {
  ordered_json out;
  out["app"] = r.app_id;
  out["gate"] = {{"ratio", r.gate.init_ratio}, {"threshold", r.gate.threshold}, {"passes", r.gate.passes}};
  ordered_json findings = ordered_json::array();
  for (const auto& f : r.findings) {
    ordered_json jf;
    jf["library"] = f.library;
    jf["kind"] = to_string(f.kind);
    jf["utilization_pct"] = f.utilization_pct;
    jf["init_overhead_pct"] = f.init_overhead_pct;
    jf["files"] = f.files;
    ordered_json paths = ordered_json::array();
    for (const auto& p : f.top_call_paths) {
      ordered_json frames = ordered_json::array();
      for (const auto& fr : p.frames) frames.push_back(frame_json(fr));
      paths.push_back({{"path", frames}, {"count", p.count}});
    }
    jf["call_paths"] = std::move(paths);
    ordered_json subs = ordered_json::array();
    for (const auto& s : f.flagged_subpackages) subs.push_back({{"name", s.name}, {"init_share_pct", s.init_share_pct}});
    jf["subpackages"] = std::move(subs);
    findings.push_back(std::move(jf));
  }
  out["findings"] = std::move(findings);
  ordered_json context = ordered_json::array();
  for (const auto& c : r.context) {
    context.push_back({{"library", c.library},
                       {"utilization_pct", c.utilization_pct},
                       {"init_overhead_pct", c.init_overhead_pct},
                       {"files", c.files}});
  }
  out["context"] = std::move(context);
  out["warnings"] = r.warnings;
  return out.dump(2) + "\n";
}

std::string render_markdown(const Report& r) {
  std::string md;
  md += "# Library Initialization Report\n\n";
  md += "**Application:** " + (r.app_id.empty() ? std::string("(unknown)") : r.app_id) + "\n\n";
  md += "## Gate\n\n";
  md += "| Init./E2E Ratio | Threshold | Passes |\n|---:|---:|:---:|\n";
  md += "| " + fixed(r.gate.init_ratio, 4) + " | " + fixed(r.gate.threshold, 4) + " | " +
        (r.gate.passes ? "yes" : "no") + " |\n\n";
  if (!r.gate.passes) {
    md += "Initialization overhead is below threshold; the application is not a candidate for optimization.\n";
  } else if (r.findings.empty()) {
    md += "No findings: no library combines significant initialization overhead with low utilization.\n";
  } else {
    md += "## Summary\n\n";
    md += "|   | Package | Util. | Init. Overhead | File |\n|:---:|---|---:|---:|---|\n";
    struct Row {
      const char* marker;
      const std::string* name;
      double util;
      double overhead;
      const std::vector<std::string>* files;
    };
    std::vector<Row> rows;
    for (const auto& f : r.findings) {
      rows.push_back({"+", &f.library, f.utilization_pct, f.init_overhead_pct, &f.files});
    }
    for (const auto& c : r.context) {
      rows.push_back({"-", &c.library, c.utilization_pct, c.init_overhead_pct, &c.files});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.overhead != b.overhead) return a.overhead > b.overhead;
      return *a.name < *b.name;
    });
    for (const auto& row : rows) {
      md += "| " + std::string(row.marker) + " | " + *row.name + " | " + fixed(row.util, 2) + " | " +
            fixed(row.overhead, 2) + " | " + (row.files->empty() ? std::string() : row.files->front()) + " |\n";
    }
    md += "\n`+` flagged for deferred loading, `-` not flagged itself (listed for its flagged sub-packages). "
          "Utilization and overhead are percentages.\n\n";
    md += "## Call Path\n";
    for (const auto& f : r.findings) {
      md += "\n### " + f.library + " (" + to_string(f.kind) + ")\n\n";
      if (f.top_call_paths.empty()) {
        md += "- (no sampled call paths)\n";
        continue;
      }
      for (const auto& p : f.top_call_paths) {
        md += "- " + render_call_path(p.frames) + " (" + std::to_string(p.count) + " samples)\n";
      }
      if (!f.flagged_subpackages.empty()) {
        md += "\nFlagged sub-packages:";
        for (const auto& s : f.flagged_subpackages) md += " " + s.name + " (" + fixed(s.init_share_pct, 2) + "%)";
        md += "\n";
      }
    }
  }
  if (!r.warnings.empty()) {
    md += "\n## Warnings\n\n";
    for (const auto& w : r.warnings) md += "- " + w + "\n";
  }
  return md;
}

}  // namespace

std::string render_report(const Report& report, ReportFormat format) {
  return format == ReportFormat::Json ? render_json(report) : render_markdown(report);
}

std::string render_report(const Report& report, const std::string& format) {
  return render_report(report, parse_report_format(format));
}

Report parse_report_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    Report r;
    r.app_id = j.value("app", std::string());
    const auto& g = j.at("gate");
    r.gate.init_ratio = g.at("ratio").get<double>();
    r.gate.threshold = g.at("threshold").get<double>();
    r.gate.passes = g.at("passes").get<bool>();
    for (const auto& jf : j.at("findings")) {
      Finding f;
      f.library = jf.at("library").get<std::string>();
      const auto kind = jf.at("kind").get<std::string>();
      if (kind != "unused" && kind != "infrequent") throw Error(ErrorKind::ParseError, "unknown finding kind " + kind);
      f.kind = kind == "unused" ? FindingKind::Unused : FindingKind::Infrequent;
      f.utilization_pct = jf.at("utilization_pct").get<double>();
      f.init_overhead_pct = jf.at("init_overhead_pct").get<double>();
      f.files = jf.value("files", std::vector<std::string>{});
      for (const auto& jp : jf.value("call_paths", nlohmann::json::array())) {
        CallPath p;
        p.count = jp.at("count").get<std::int64_t>();
        for (const auto& fr : jp.at("path")) {
          p.frames.push_back({fr.at(0).get<std::string>(), fr.at(1).get<std::string>(), fr.at(2).get<std::int64_t>()});
        }
        f.top_call_paths.push_back(std::move(p));
      }
      for (const auto& js : jf.value("subpackages", nlohmann::json::array())) {
        f.flagged_subpackages.push_back({js.at("name").get<std::string>(), js.at("init_share_pct").get<double>()});
      }
      r.findings.push_back(std::move(f));
    }
    for (const auto& jc : j.value("context", nlohmann::json::array())) {
      ContextRow c;
      c.library = jc.at("library").get<std::string>();
      c.utilization_pct = jc.at("utilization_pct").get<double>();
      c.init_overhead_pct = jc.at("init_overhead_pct").get<double>();
      c.files = jc.value("files", std::vector<std::string>{});
      r.context.push_back(std::move(c));
    }
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("invalid report JSON: ") + e.what());
  }
}

}  // namespace pgo
