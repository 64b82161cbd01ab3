// pgo: profile-guided import optimization for serverless Python apps.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "pgo/collector.hpp"
#include "pgo/service.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

void print_validation(const pgo::ValidationReport& v) {
  if (v.duplicates_removed) std::cerr << "duplicates removed: " << v.duplicates_removed << "\n";
  for (const auto& w : v.warnings) std::cerr << "warning: " << w << "\n";
  if (!v.orphan_invocation_ids.empty()) {
    std::cerr << "warning: " << v.orphan_invocation_ids.size() << " orphan invocation id(s)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profile-guided optimizer for library initialization in serverless Python applications"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Config file (falls back to $PGO_CONFIG)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Merge agent batch files into a profile store");
  std::vector<std::string> ingest_inputs;
  std::string ingest_out = "store";
  ingest->add_option("inputs", ingest_inputs, "Batch files or directories (default: collector directory)");
  ingest->add_option("--out", ingest_out, "Store root")->capture_default_str();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Build the init breakdown and CCT, detect inefficient libraries");
  std::string analyze_store;
  std::string analyze_out = "analysis";
  analyze->add_option("store", analyze_store, "store.pgoprof.jsonl")->required();
  analyze->add_option("--out", analyze_out, "Output directory")->capture_default_str();

  // report
  auto* report = app.add_subcommand("report", "Render a report.json");
  std::string report_in;
  std::string report_format = "markdown";
  report->add_option("report", report_in, "report.json")->required();
  report->add_option("--format", report_format, "json or markdown")->capture_default_str();

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Defer flagged imports in a source tree");
  std::string opt_report;
  std::string opt_source;
  std::string opt_out;
  std::string opt_plans_in;
  std::string opt_plans_out;
  bool dry_run = false;
  optimize->add_option("report", opt_report, "report.json")->required();
  optimize->add_option("source", opt_source, "Source root or single file")->required();
  optimize->add_flag("--dry-run", dry_run, "Print a unified diff instead of writing");
  optimize->add_option("--plans", opt_plans_in, "Apply previously saved plans");
  optimize->add_option("--save-plans", opt_plans_out, "Save the computed plans");
  optimize->add_option("--out", opt_out, "Write the patch summary here instead of stdout");

  // watch
  auto* watch = app.add_subcommand("watch", "Replay or follow an invocation trace and fire re-optimization");
  pgo::WatchOptions wopts;
  std::string watch_trace;
  std::string watch_out = "watch";
  std::string watch_store;
  std::string watch_source;
  bool no_auto = false;
  watch->add_option("trace", watch_trace, "Trace CSV")->required();
  watch->add_option("--out", watch_out, "Output directory for triggers.jsonl")->capture_default_str();
  watch->add_flag("--auto", wopts.auto_optimize, "Run analyze and optimize on every trigger");
  watch->add_flag("--no-auto", no_auto, "Only record triggers (default)");
  watch->add_option("--store", watch_store, "Profile store for --auto");
  watch->add_option("--source", watch_source, "Source root for --auto");
  watch->add_flag("--follow", wopts.follow, "Keep reading the trace as it grows");
  watch->add_option("--idle-timeout-ms", wopts.idle_timeout_ms, "With --follow, stop after this much idle time");

  // serve-collector
  auto* serve = app.add_subcommand("serve-collector", "Accept agent batches over HTTP");
  std::string bind = "127.0.0.1:8080";
  std::string serve_out;
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--out", serve_out, "Batch directory (default: configured collector directory)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic invocation trace");
  pgo::SimSpec spec;
  std::vector<std::size_t> shifts;
  std::string sim_out;
  bool per_invocation = false;
  sim->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  sim->add_option("--app", spec.app_id, "App id")->capture_default_str();
  sim->add_option("--entries", spec.entries, "Entry points")->capture_default_str();
  sim->add_option("--windows", spec.windows, "Windows")->capture_default_str();
  sim->add_option("--window-ms", spec.window_ms, "Window width")->capture_default_str();
  sim->add_option("--per-window", spec.invocations_per_window, "Invocations per window")->capture_default_str();
  sim->add_option("--skew", spec.skew, "Zipf exponent")->capture_default_str();
  sim->add_option("--shift", shifts, "Window index at which the top-k mass swaps (repeatable)");
  sim->add_option("--shift-k", spec.shift_k, "Ranks swapped per shift")->capture_default_str();
  sim->add_option("--jitter", spec.jitter, "Relative count noise")->capture_default_str();
  sim->add_flag("--per-invocation", per_invocation, "One row per invocation instead of bucketed counts");
  sim->add_option("--out", sim_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const pgo::Config cfg = pgo::load_config(config_path.empty() ? std::nullopt : std::optional(config_path));

    if (*ingest) {
      std::vector<pgo::fs::path> inputs(ingest_inputs.begin(), ingest_inputs.end());
      const auto r = pgo::cmd_ingest(inputs, ingest_out, cfg);
      print_validation(r.validation);
      std::cout << r.store_path.string() << "\n";
      std::cerr << r.batches << " batch(es), " << r.records << " record(s), app " << r.app_id << "\n";
      return 0;
    }
    if (*analyze) {
      const auto r = pgo::cmd_analyze(analyze_store, analyze_out, cfg);
      std::cout << r.json_path.string() << "\n" << r.markdown_path.string() << "\n";
      std::cerr << "gate ratio " << r.report.gate.init_ratio << (r.report.gate.passes ? " (passes)" : " (below threshold)")
                << ", " << r.report.findings.size() << " finding(s)\n";
      return 0;
    }
    if (*report) {
      std::cout << pgo::cmd_report(report_in, report_format);
      return 0;
    }
    if (*optimize) {
      pgo::OptimizeOptions oo;
      oo.dry_run = dry_run;
      if (!opt_plans_in.empty()) oo.plans_in = opt_plans_in;
      if (!opt_plans_out.empty()) oo.plans_out = opt_plans_out;
      const auto r = pgo::cmd_optimize(opt_report, opt_source, cfg, oo);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      if (dry_run) {
        for (const auto& f : r.files) std::cout << f.diff;
      }
      if (!opt_out.empty()) {
        pgo::write_file_atomic(opt_out, r.summary_json());
      } else if (!dry_run) {
        std::cout << r.summary_json();
      }
      for (const auto& f : r.files) {
        for (const auto& msg : f.verification.failures) std::cerr << f.file << ": " << msg << "\n";
      }
      return r.all_verified ? 0 : 3;
    }
    if (*watch) {
      if (wopts.auto_optimize && no_auto) throw pgo::Error(pgo::ErrorKind::Config, "--auto and --no-auto conflict");
      wopts.trace = watch_trace;
      wopts.out_dir = watch_out;
      if (!watch_store.empty()) wopts.store = watch_store;
      if (!watch_source.empty()) wopts.source_root = watch_source;
      const auto r = pgo::cmd_watch(wopts, cfg);
      std::cerr << r.fired.size() << " trigger(s)";
      if (r.malformed_rows) std::cerr << ", " << r.malformed_rows << " malformed row(s) skipped";
      if (r.late_rows) std::cerr << ", " << r.late_rows << " late row(s) dropped";
      if (wopts.auto_optimize) std::cerr << ", " << r.optimizations << " optimization run(s)";
      std::cerr << "\n";
      std::cout << r.triggers_path.string() << "\n";
      return 0;
    }
    if (*serve) {
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw pgo::Error(pgo::ErrorKind::Config, "--bind must be host:port");
      const std::string host = bind.substr(0, colon);
      const int port = std::stoi(bind.substr(colon + 1));
      std::string dir = serve_out;
      if (dir.empty()) {
        if (cfg.collector.mode != pgo::CollectorSink::Mode::Dir) {
          throw pgo::Error(pgo::ErrorKind::Config, "serve-collector needs --out or a dir: collector");
        }
        dir = cfg.collector.location;
      }
      pgo::CollectorServer server(dir);
      const int bound = server.bind(host, port);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      std::cout << "listening on " << host << ":" << bound << ", writing to " << dir << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return 0;
    }
    if (*sim) {
      spec.shift_windows.insert(shifts.begin(), shifts.end());
      const std::string csv = pgo::cmd_simulate(spec, !per_invocation);
      if (sim_out.empty()) {
        std::cout << csv;
      } else {
        pgo::write_file_atomic(sim_out, csv);
      }
      return 0;
    }
  } catch (const pgo::Error& e) {
    std::cerr << "pgo: " << pgo::to_string(e.kind()) << ": " << e.what() << "\n";
    return pgo::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "pgo: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
