#pragma once

// Operator configuration: a flat JSON object whose keys are exactly the
// fields below. Unknown keys are errors.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgo/detector.hpp"

namespace pgo {

struct CollectorSink {
  enum class Mode { Dir, Http } mode = Mode::Dir;
  std::string location = "profiles";

  /// "dir:<path>" or "http://host:port[/path]".
  static CollectorSink parse(const std::string& text);
  std::string to_string() const;
};

struct Config {
  std::string app_root;
  std::vector<std::string> library_roots{"site-packages", "dist-packages"};
  double sampling_hz = 100.0;
  double gate_threshold = 0.10;
  double utilization_threshold = 0.02;
  double min_init_share = 0.05;
  double epsilon = 0.002;
  std::int64_t window_ms = 43'200'000;
  std::vector<std::string> denylist;
  CollectorSink collector;
  Granularity granularity = Granularity::Both;

  DetectorConfig detector() const;

  /// Canonical JSON with every key present; its digest identifies the config.
  std::string canonical_json() const;
};

/// Throws Error(Config) on malformed JSON, unknown keys, wrong types or
/// values out of range.
Config parse_config(std::string_view json_text);

/// Loads `path`, else $PGO_CONFIG, else returns defaults.
Config load_config(const std::optional<std::string>& path);

Granularity parse_granularity(const std::string& name);
const char* to_string(Granularity g);

}  // namespace pgo
