#include "pgo/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pgo/cct.hpp"
#include "pgo/collector.hpp"
#include "pgo/digest.hpp"
#include "pgo/init_analyzer.hpp"

namespace pgo {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_batch_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > kBatchSuffix.size() && name.front() != '.' &&
         name.compare(name.size() - kBatchSuffix.size(), kBatchSuffix.size(), kBatchSuffix) == 0;
}

std::string relative_string(const fs::path& p, const fs::path& root) {
  return p.lexically_relative(root).generic_string();
}

bool within(const std::string& module, const std::string& root) {
  return module == root || (module.size() > root.size() && module.compare(0, root.size(), root) == 0 &&
                            module[root.size()] == '.');
}

std::string top_component(const std::string& dotted) { return dotted.substr(0, dotted.find('.')); }

bool skipped_dir(const fs::path& p) {
  const std::string name = p.filename().string();
  return (!name.empty() && name.front() == '.') || name == "__pycache__" || name == "site-packages" ||
         name == "dist-packages";
}

std::vector<fs::path> python_files(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(root)) return {root};
  if (!fs::is_directory(root)) throw Error(ErrorKind::Io, "source root not found: " + root.string());
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && skipped_dir(it->path())) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && it->path().extension() == ".py") out.push_back(it->path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownFormat:
    case ErrorKind::Config:
      return 1;
    case ErrorKind::VerificationFailure:
      return 3;
    default:
      return 2;
  }
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["run_id"] = run_id;
  j["command"] = command;
  j["created_at"] = created_at;
  auto digests = [](const std::vector<ArtifactDigest>& v) {
    auto arr = ordered_json::array();
    for (const auto& d : v) arr.push_back({{"path", d.path}, {"sha256", d.sha256}});
    return arr;
  };
  j["inputs"] = digests(inputs);
  j["config_digest"] = config_digest;
  j["artifacts"] = digests(artifacts);
  return j.dump(2) + "\n";
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

IngestResult cmd_ingest(const std::vector<fs::path>& inputs, const fs::path& out_root, const Config& cfg) {
  std::vector<fs::path> sources = inputs;
  if (sources.empty()) {
    if (cfg.collector.mode != CollectorSink::Mode::Dir) {
      throw Error(ErrorKind::Config, "no inputs given and the collector is not a directory sink");
    }
    sources.emplace_back(cfg.collector.location);
  }
  std::vector<fs::path> files;
  for (const auto& src : sources) {
    if (fs::is_directory(src)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(src)) {
        if (e.is_regular_file() && is_batch_file(e.path())) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(src)) {
      files.push_back(src);
    } else {
      throw Error(ErrorKind::Io, "input not found: " + src.string());
    }
  }
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no batch files found");

  IngestResult r;
  std::vector<RecordBatch> batches;
  std::vector<std::string> digests;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    try {
      batches.push_back(parse_batch(text));
    } catch (const Error& e) {
      throw Error(e.kind(), f.string() + ":" + e.what());
    }
    r.manifest.inputs.push_back({f.string(), sha256_hex(text)});
    digests.push_back(r.manifest.inputs.back().sha256);
  }
  auto merged = validate_and_merge(batches);
  r.app_id = merged.store.app_id;
  r.batches = batches.size();
  r.records = merged.store.samples.size() + merged.store.imports.size() + merged.store.invocations.size() +
              merged.store.metas.size();
  r.validation = merged.report;

  std::sort(digests.begin(), digests.end());
  const std::string config_digest = sha256_hex(cfg.canonical_json());
  std::string seed = config_digest;
  for (const auto& d : digests) seed += "\n" + d;
  const std::string run_id = sha256_hex(seed).substr(0, 16);

  r.run_dir = out_root / r.app_id / run_id;
  r.store_path = r.run_dir / "store.pgoprof.jsonl";
  const std::string store_text = serialize_store(merged.store);
  write_file_atomic(r.store_path, store_text);

  r.manifest.run_id = run_id;
  r.manifest.command = "ingest";
  r.manifest.created_at = utc_now();
  r.manifest.config_digest = config_digest;
  r.manifest.artifacts.push_back({r.store_path.string(), sha256_hex(store_text)});
  write_file_atomic(r.run_dir / "manifest.json", r.manifest.to_json());
  return r;
}

AnalyzeResult cmd_analyze(const fs::path& store_path, const fs::path& out_dir, const Config& cfg) {
  const std::string text = read_file(store_path);
  auto merged = validate_and_merge({parse_batch(text)});
  const ProfileStore& store = merged.store;

  AnalyzeResult res;
  Report& rep = res.report;
  rep.app_id = store.app_id;
  rep.warnings = merged.report.warnings;
  if (!merged.report.orphan_invocation_ids.empty()) {
    rep.warnings.push_back(std::to_string(merged.report.orphan_invocation_ids.size()) +
                           " invocation id(s) have samples or imports but no invocation event");
  }
  const InitNode tree = build_init_tree(store.imports);
  rep.gate = gate(tree, store.invocations, cfg.gate_threshold);
  if (rep.gate.passes) {
    const PathMapping mapping(cfg.library_roots, cfg.app_root);
    const Cct cct = build_cct(store, mapping);
    const auto stats = library_stats(cct);
    rep.findings = detect(stats, tree, cfg.detector(), app_module_roots(stats));
    rep.context = context_rows(stats, tree, rep.findings);
    if (!cct.unmatched_paths().empty()) {
      std::string w = std::to_string(cct.unmatched_paths().size()) +
                      " file path(s) matched no library root and were attributed to the application:";
      std::size_t shown = 0;
      for (const auto& p : cct.unmatched_paths()) {
        if (shown++ == 5) {
          w += " ...";
          break;
        }
        w += " " + p;
      }
      rep.warnings.push_back(w);
    }
  }

  const std::string json = render_report(rep, ReportFormat::Json);
  const std::string md = render_report(rep, ReportFormat::Markdown);
  res.json_path = out_dir / "report.json";
  res.markdown_path = out_dir / "report.md";
  write_file_atomic(res.json_path, json);
  write_file_atomic(res.markdown_path, md);

  const std::string config_digest = sha256_hex(cfg.canonical_json());
  const std::string store_digest = sha256_hex(text);
  res.manifest.run_id = sha256_hex(config_digest + "\n" + store_digest).substr(0, 16);
  res.manifest.command = "analyze";
  res.manifest.created_at = utc_now();
  res.manifest.inputs.push_back({store_path.string(), store_digest});
  res.manifest.config_digest = config_digest;
  res.manifest.artifacts.push_back({res.json_path.string(), sha256_hex(json)});
  res.manifest.artifacts.push_back({res.markdown_path.string(), sha256_hex(md)});
  write_file_atomic(out_dir / "manifest.json", res.manifest.to_json());
  return res;
}

std::string cmd_report(const fs::path& report_json, const std::string& format) {
  const auto fmt = parse_report_format(format);
  return render_report(parse_report_json(read_file(report_json)), fmt);
}

std::set<std::string> flagged_modules(const Report& report) {
  std::set<std::string> out;
  if (!report.gate.passes) return out;
  for (const auto& f : report.findings) out.insert(f.library);
  return out;
}

std::string OptimizeResult::summary_json() const {
  ordered_json j;
  auto arr = ordered_json::array();
  for (const auto& f : files) {
    auto s = ordered_json::parse(patch_summary_json(f.plan));
    s["applied"] = f.applied;
    s["verified"] = f.verification.ok;
    s["failures"] = f.verification.failures;
    arr.push_back(std::move(s));
  }
  j["files"] = std::move(arr);
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

OptimizeResult cmd_optimize(const fs::path& report_json, const fs::path& source_root, const Config& cfg,
                            const OptimizeOptions& opts) {
  OptimizeResult res;
  const Report report = parse_report_json(read_file(report_json));
  const auto flagged = flagged_modules(report);
  if (!report.gate.passes) {
    res.warnings.push_back("the report's gate did not pass; nothing to optimize");
    return res;
  }
  if (flagged.empty()) {
    res.warnings.push_back("the report has no findings; nothing to optimize");
    return res;
  }
  const fs::path base = fs::is_regular_file(source_root) ? source_root.parent_path() : source_root;

  auto finish_file = [&](FileOutcome& out, const std::string& source, const fs::path& path) {
    if (out.plan.empty()) return;
    const std::string rewritten = pgo::apply(source, out.plan);
    out.verification = check(source, rewritten);
    if (opts.dry_run) {
      out.diff = unified_diff(source, out.plan, out.file);
    } else if (out.verification.ok) {
      write_file_atomic(path, rewritten);
      out.applied = true;
    }
    if (!out.verification.ok) res.all_verified = false;
  };

  if (opts.plans_in) {
    for (auto& p : plans_from_json(read_file(*opts.plans_in))) {
      FileOutcome out;
      out.file = p.file;
      out.plan = std::move(p);
      const fs::path path = base / out.file;
      const std::string source = read_file(path);
      finish_file(out, source, path);
      res.files.push_back(std::move(out));
    }
    return res;
  }

  std::set<std::string> seen;
  std::vector<RewritePlan> plans;
  for (const auto& path : python_files(source_root)) {
    const std::string rel = relative_string(path, base);
    const std::string top = fs::path(rel).begin()->string();
    const std::string top_module = top.size() > 3 && top.ends_with(".py") ? top.substr(0, top.size() - 3) : top;
    const bool library_internal = std::any_of(flagged.begin(), flagged.end(),
                                              [&](const std::string& f) { return top_component(f) == top_module; });
    if (library_internal) continue;
    const std::string source = read_file(path);
    FileOutcome out;
    out.file = rel;
    try {
      for (const auto& g : scan_imports(source, rel)) {
        for (const auto& f : flagged) {
          bool hit = within(g.target_module, f);
          for (const auto& b : g.bound_names) hit = hit || within(b.refers_to, f);
          if (hit) seen.insert(f);
        }
      }
      PlanOptions po;
      po.flagged = flagged;
      po.denylist = std::set<std::string>(cfg.denylist.begin(), cfg.denylist.end());
      po.file = rel;
      out.plan = plan(source, po);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ParseError) throw;
      res.warnings.push_back("skipping " + rel + ": " + e.what());
      continue;
    }
    for (const auto& s : out.plan.skipped) {
      // Guarded or otherwise skipped imports still count as found.
      for (const auto& f : flagged) {
        if (s.detail.find(" " + f) != std::string::npos) seen.insert(f);
      }
    }
    if (out.plan.empty() && out.plan.skipped.empty()) continue;
    finish_file(out, source, path);
    if (!out.plan.empty()) plans.push_back(out.plan);
    res.files.push_back(std::move(out));
  }
  for (const auto& f : flagged) {
    if (!seen.contains(f)) res.warnings.push_back("no module-level import of " + f + " found under the source root");
  }
  if (opts.plans_out) write_file_atomic(*opts.plans_out, plans_to_json(plans));
  return res;
}

namespace {

void on_fire(const WatchOptions& opts, const Config& cfg, WatchResult& res, std::ofstream& triggers,
             const std::string& app, const TriggerDecision& d) {
  triggers << trigger_record_json(app, d) << "\n";
  triggers.flush();
  res.fired.emplace_back(app, d);
  if (!opts.auto_optimize) return;
  if (!opts.store || !opts.source_root) {
    throw Error(ErrorKind::Config, "--auto needs a profile store and a source root");
  }
  const fs::path run_dir = opts.out_dir / ("auto-" + std::to_string(res.optimizations + 1));
  const auto analyzed = cmd_analyze(*opts.store, run_dir, cfg);
  OptimizeOptions oo;
  oo.plans_out = run_dir / "plans.json";
  const auto optimized = cmd_optimize(analyzed.json_path, *opts.source_root, cfg, oo);
  write_file_atomic(run_dir / "optimize.json", optimized.summary_json());
  ++res.optimizations;
}

}  // namespace

WatchResult cmd_watch(const WatchOptions& opts, const Config& cfg) {
  WatchResult res;
  AdaptiveConfig acfg{cfg.window_ms, cfg.epsilon};
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  res.triggers_path = opts.out_dir / "triggers.jsonl";
  std::ofstream triggers(res.triggers_path, std::ios::binary | std::ios::app);
  if (!triggers) throw Error(ErrorKind::Io, "cannot write " + res.triggers_path.string());

  if (!opts.follow) {
    const auto parsed = parse_trace_csv(read_file(opts.trace));
    res.malformed_rows = parsed.malformed;
    if (parsed.rows.empty()) throw Error(ErrorKind::EmptyStream, "trace has no valid rows");
    std::map<std::string, std::vector<TraceRow>> by_app;
    for (const auto& r : parsed.rows) by_app[r.app_id].push_back(r);
    for (const auto& [app, rows] : by_app) {
      const auto tl = run_trace(rows, acfg);
      for (const auto& d : tl.decisions) {
        if (d.fired) on_fire(opts, cfg, res, triggers, app, d);
      }
    }
    return res;
  }

  // Follow mode: tail the trace and feed complete rows as they arrive.
  std::map<std::string, StreamingController> controllers;
  std::ifstream in(opts.trace, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + opts.trace.string());
  std::string pending;
  std::string header;
  auto idle_since = std::chrono::steady_clock::now();
  auto feed_line = [&](const std::string& line) {
    if (header.empty()) {
      header = line;
      parse_trace_csv(header + "\n");  // validates the header
      return;
    }
    const auto parsed = parse_trace_csv(header + "\n" + line + "\n");
    res.malformed_rows += parsed.malformed;
    for (const auto& row : parsed.rows) {
      auto [it, inserted] = controllers.try_emplace(row.app_id, acfg);
      for (const auto& d : it->second.push(row)) {
        if (d.fired) on_fire(opts, cfg, res, triggers, row.app_id, d);
      }
    }
  };
  char buf[4096];
  while (true) {
    in.read(buf, sizeof buf);
    const auto got = in.gcount();
    if (got > 0) {
      pending.append(buf, static_cast<std::size_t>(got));
      std::size_t nl;
      while ((nl = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, nl);
        pending.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) feed_line(line);
      }
      idle_since = std::chrono::steady_clock::now();
      continue;
    }
    in.clear();
    const auto idle = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - idle_since);
    if (opts.idle_timeout_ms >= 0 && idle.count() >= opts.idle_timeout_ms) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  if (!pending.empty() && pending.find_first_not_of(" \t\r") != std::string::npos) feed_line(pending);
  for (auto& [app, ctl] : controllers) {
    for (const auto& d : ctl.finish()) {
      if (d.fired) on_fire(opts, cfg, res, triggers, app, d);
    }
    res.late_rows += ctl.late_rows();
  }
  return res;
}

std::string cmd_simulate(const SimSpec& spec, bool bucketed) { return render_trace_csv(simulate(spec), bucketed); }

}  // namespace pgo
