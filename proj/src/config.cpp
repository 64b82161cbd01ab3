#include "pgo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pgo/error.hpp"

namespace pgo {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::Config, "config: " + msg); }

double number(const json& v, const char* key) {
  if (!v.is_number()) bad(std::string(key) + " must be a number");
  return v.get<double>();
}

std::vector<std::string> strings(const json& v, const char* key) {
  if (!v.is_array()) bad(std::string(key) + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) bad(std::string(key) + " must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void unit_interval(double v, const char* key) {
  if (!(v > 0.0 && v < 1.0)) bad(std::string(key) + " must be in (0, 1)");
}

}  // namespace

CollectorSink CollectorSink::parse(const std::string& text) {
  CollectorSink s;
  if (text.rfind("dir:", 0) == 0 && text.size() > 4) {
    s.mode = Mode::Dir;
    s.location = text.substr(4);
  } else if (text.rfind("http://", 0) == 0 && text.size() > 7) {
    s.mode = Mode::Http;
    s.location = text;
  } else {
    bad("collector must be \"dir:<path>\" or \"http://...\", got \"" + text + "\"");
  }
  return s;
}

std::string CollectorSink::to_string() const { return mode == Mode::Dir ? "dir:" + location : location; }

Granularity parse_granularity(const std::string& name) {
  if (name == "both") return Granularity::Both;
  if (name == "library") return Granularity::Library;
  if (name == "subpackage") return Granularity::Subpackage;
  bad("granularity must be one of both, library, subpackage");
}

const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::Library:
      return "library";
    case Granularity::Subpackage:
      return "subpackage";
    case Granularity::Both:
      break;
  }
  return "both";
}

DetectorConfig Config::detector() const {
  DetectorConfig d;
  d.utilization_threshold = utilization_threshold;
  d.min_init_share = min_init_share;
  d.gate_threshold = gate_threshold;
  d.granularity = granularity;
  return d;
}

std::string Config::canonical_json() const {
  nlohmann::ordered_json j;
  j["app_root"] = app_root;
  j["library_roots"] = library_roots;
  j["sampling_hz"] = sampling_hz;
  j["gate_threshold"] = gate_threshold;
  j["utilization_threshold"] = utilization_threshold;
  j["min_init_share"] = min_init_share;
  j["epsilon"] = epsilon;
  j["window_ms"] = window_ms;
  j["denylist"] = denylist;
  j["collector"] = collector.to_string();
  j["granularity"] = to_string(granularity);
  return j.dump();
}

Config parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");
  Config c;
  for (const auto& [key, v] : j.items()) {
    if (key == "app_root") {
      if (!v.is_string()) bad("app_root must be a string");
      c.app_root = v.get<std::string>();
    } else if (key == "library_roots") {
      c.library_roots = strings(v, "library_roots");
      if (c.library_roots.empty()) bad("library_roots must not be empty");
    } else if (key == "sampling_hz") {
      c.sampling_hz = number(v, "sampling_hz");
      if (c.sampling_hz < 1.0 || c.sampling_hz > 1000.0) bad("sampling_hz must be in [1, 1000]");
    } else if (key == "gate_threshold") {
      c.gate_threshold = number(v, "gate_threshold");
      unit_interval(c.gate_threshold, "gate_threshold");
    } else if (key == "utilization_threshold") {
      c.utilization_threshold = number(v, "utilization_threshold");
      unit_interval(c.utilization_threshold, "utilization_threshold");
    } else if (key == "min_init_share") {
      c.min_init_share = number(v, "min_init_share");
      unit_interval(c.min_init_share, "min_init_share");
    } else if (key == "epsilon") {
      c.epsilon = number(v, "epsilon");
      unit_interval(c.epsilon, "epsilon");
    } else if (key == "window_ms") {
      if (!v.is_number_integer()) bad("window_ms must be an integer");
      c.window_ms = v.get<std::int64_t>();
      if (c.window_ms < 60'000) bad("window_ms must be at least 60000");
    } else if (key == "denylist") {
      c.denylist = strings(v, "denylist");
    } else if (key == "collector") {
      if (!v.is_string()) bad("collector must be a string");
      c.collector = CollectorSink::parse(v.get<std::string>());
    } else if (key == "granularity") {
      if (!v.is_string()) bad("granularity must be a string");
      c.granularity = parse_granularity(v.get<std::string>());
    } else {
      bad("unknown key \"" + key + "\"");
    }
  }
  return c;
}

Config load_config(const std::optional<std::string>& path) {
  std::string p;
  if (path && !path->empty()) {
    p = *path;
  } else if (const char* env = std::getenv("PGO_CONFIG"); env && *env) {
    p = env;
  } else {
    return Config{};
  }
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "config: cannot read " + p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace pgo
