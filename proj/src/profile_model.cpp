#include "pgo/profile_model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "pgo/error.hpp"

namespace pgo {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorKind::MalformedRecord, what);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string require_nonempty_string(const json& obj, const char* key) {
  std::string s = require_string(obj, key);
  if (s.empty()) malformed(std::string("field '") + key + "' must be non-empty");
  return s;
}

std::int64_t require_time(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer()) malformed(std::string("field '") + key + "' must be an integer");
  std::int64_t t = v.get<std::int64_t>();
  if (t < 0) malformed(std::string("negative time in '") + key + "'");
  return t;
}

std::string last_component(std::string_view dotted) {
  auto pos = dotted.rfind('.');
  return std::string(pos == std::string_view::npos ? dotted : dotted.substr(pos + 1));
}

CallFrame parse_frame(const json& v) {
  if (!v.is_array() || v.size() != 3) malformed("frame must be [function, file, line]");
  if (!v[0].is_string() || !v[1].is_string() || !v[2].is_number_integer()) {
    malformed("frame must be [string, string, integer]");
  }
  CallFrame f{v[0].get<std::string>(), v[1].get<std::string>(), v[2].get<std::int64_t>()};
  if (f.function_name.empty() || f.file_path.empty()) malformed("frame names must be non-empty");
  if (f.line < 1) malformed("frame line must be >= 1");
  return f;
}

StackSample parse_sample(const json& obj) {
  StackSample s;
  s.timestamp_ms = require_time(obj, "ts");
  s.invocation_id = require_nonempty_string(obj, "inv");
  s.entry_point = require_nonempty_string(obj, "ep");
  const json& fr = require(obj, "fr");
  if (!fr.is_array()) malformed("field 'fr' must be an array");
  if (fr.empty()) malformed("stack sample has no frames");
  s.frames.reserve(fr.size());
  for (const auto& f : fr) s.frames.push_back(parse_frame(f));
  const std::string& root = s.frames.front().function_name;
  if (root != last_component(s.entry_point) && root != "<module>") {
    malformed("entry frame '" + root + "' does not match entry point '" + s.entry_point + "'");
  }
  return s;
}

ImportTiming parse_import(const json& obj) {
  ImportTiming t;
  t.invocation_id = require_nonempty_string(obj, "inv");
  t.module = require_string(obj, "mod");
  if (!is_valid_module_name(t.module)) malformed("invalid module name '" + t.module + "'");
  t.self_time_us = require_time(obj, "self_us");
  return t;
}

InvocationEvent parse_invocation(const json& obj) {
  InvocationEvent e;
  e.timestamp_ms = require_time(obj, "ts");
  e.invocation_id = require_nonempty_string(obj, "inv");
  e.entry_point = require_nonempty_string(obj, "ep");
  e.e2e_time_us = require_time(obj, "e2e_us");
  const json& cold = require(obj, "cold");
  if (!cold.is_boolean()) malformed("field 'cold' must be a boolean");
  e.cold_start = cold.get<bool>();
  return e;
}

MetaRecord parse_meta(const json& obj) {
  MetaRecord m;
  m.app_id = require_nonempty_string(obj, "app");
  m.agent_version = require_string(obj, "agent_ver");
  const json& hz = require(obj, "hz");
  if (!hz.is_number()) malformed("field 'hz' must be a number");
  m.sampling_hz = hz.get<double>();
  if (m.sampling_hz < 0) malformed("field 'hz' must be non-negative");
  return m;
}

}  // namespace

bool is_valid_module_name(std::string_view name) {
  if (name.empty()) return false;
  bool at_start = true;
  for (char c : name) {
    const bool alpha = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
    const bool digit = c >= '0' && c <= '9';
    if (c == '.') {
      if (at_start) return false;
      at_start = true;
    } else if (alpha || (digit && !at_start)) {
      at_start = false;
    } else {
      return false;
    }
  }
  return !at_start;
}

ProfileRecord parse_record(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    malformed(std::string("bad JSON: ") + e.what());
  }
  if (!obj.is_object()) malformed("record must be a JSON object");
  const std::string kind = require_string(obj, "k");
  if (kind == "sample") return parse_sample(obj);
  if (kind == "imp") return parse_import(obj);
  if (kind == "invk") return parse_invocation(obj);
  if (kind == "meta") return parse_meta(obj);
  malformed("unknown record kind '" + kind + "'");
}

std::string serialize_record(const ProfileRecord& record) {
  ordered_json out;
  std::visit(
      [&out](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, StackSample>) {
          out["k"] = "sample";
          out["ts"] = r.timestamp_ms;
          out["inv"] = r.invocation_id;
          out["ep"] = r.entry_point;
          ordered_json frames = ordered_json::array();
          for (const auto& f : r.frames) {
            frames.push_back(ordered_json::array({f.function_name, f.file_path, f.line}));
          }
          out["fr"] = std::move(frames);
        } else if constexpr (std::is_same_v<T, ImportTiming>) {
          out["k"] = "imp";
          out["inv"] = r.invocation_id;
          out["mod"] = r.module;
          out["self_us"] = r.self_time_us;
        } else if constexpr (std::is_same_v<T, InvocationEvent>) {
          out["k"] = "invk";
          out["ts"] = r.timestamp_ms;
          out["inv"] = r.invocation_id;
          out["ep"] = r.entry_point;
          out["e2e_us"] = r.e2e_time_us;
          out["cold"] = r.cold_start;
        } else {
          out["k"] = "meta";
          out["app"] = r.app_id;
          out["agent_ver"] = r.agent_version;
          out["hz"] = r.sampling_hz;
        }
      },
      record);
  return out.dump();
}

MergeResult validate_and_merge(const std::vector<RecordBatch>& batches) {
  if (batches.empty()) throw Error(ErrorKind::EmptyInput, "no batches to merge");

  // Each unique record is kept with its canonical bytes; the bytes are the
  // final sort key so that batch order cannot influence the result.
  struct Keyed {
    std::string bytes;
    const ProfileRecord* record;
  };
  std::unordered_set<std::string> seen;
  std::vector<Keyed> unique;
  std::size_t total = 0;
  for (const auto& batch : batches) {
    for (const auto& rec : batch) {
      ++total;
      std::string bytes = serialize_record(rec);
      if (seen.insert(bytes).second) unique.push_back({std::move(bytes), &rec});
    }
  }
  if (total == 0) throw Error(ErrorKind::EmptyInput, "batches contain no records");

  MergeResult result;
  result.report.duplicates_removed = total - unique.size();

  std::vector<std::pair<std::string, StackSample>> samples;
  std::vector<std::pair<std::string, ImportTiming>> imports;
  std::vector<std::pair<std::string, InvocationEvent>> invocations;
  std::vector<std::pair<std::string, MetaRecord>> metas;
  for (auto& k : unique) {
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, StackSample>) samples.emplace_back(k.bytes, r);
          else if constexpr (std::is_same_v<T, ImportTiming>) imports.emplace_back(k.bytes, r);
          else if constexpr (std::is_same_v<T, InvocationEvent>) invocations.emplace_back(k.bytes, r);
          else metas.emplace_back(k.bytes, r);
        },
        *k.record);
  }

  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.timestamp_ms, a.second.invocation_id, a.first) <
           std::tie(b.second.timestamp_ms, b.second.invocation_id, b.first);
  });
  std::sort(invocations.begin(), invocations.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.timestamp_ms, a.second.invocation_id, a.first) <
           std::tie(b.second.timestamp_ms, b.second.invocation_id, b.first);
  });
  std::map<std::string, std::int64_t> invocation_ts;
  for (const auto& [bytes, inv] : invocations) invocation_ts.emplace(inv.invocation_id, inv.timestamp_ms);
  auto ts_of = [&](const std::string& id) {
    auto it = invocation_ts.find(id);
    return it == invocation_ts.end() ? std::int64_t{0} : it->second;
  };
  std::sort(imports.begin(), imports.end(), [&](const auto& a, const auto& b) {
    const auto ta = ts_of(a.second.invocation_id);
    const auto tb = ts_of(b.second.invocation_id);
    return std::tie(ta, a.second.invocation_id, a.first) < std::tie(tb, b.second.invocation_id, b.first);
  });
  std::sort(metas.begin(), metas.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  ProfileStore& store = result.store;
  for (auto& [b, s] : samples) store.samples.push_back(std::move(s));
  for (auto& [b, i] : imports) store.imports.push_back(std::move(i));
  for (auto& [b, e] : invocations) store.invocations.push_back(std::move(e));
  for (auto& [b, m] : metas) store.metas.push_back(std::move(m));

  std::set<std::string> app_ids;
  for (const auto& m : store.metas) app_ids.insert(m.app_id);
  store.app_id = app_ids.empty() ? std::string("default") : *app_ids.begin();
  if (app_ids.size() > 1) {
    result.report.warnings.push_back("multiple app ids in batches; using '" + store.app_id + "'");
  }

  std::set<std::string> orphans;
  for (const auto& s : store.samples) {
    if (!invocation_ts.contains(s.invocation_id)) orphans.insert(s.invocation_id);
  }
  std::map<std::string, std::int64_t> import_totals;
  for (const auto& i : store.imports) {
    if (!invocation_ts.contains(i.invocation_id)) orphans.insert(i.invocation_id);
    import_totals[i.invocation_id] += i.self_time_us;
  }
  result.report.orphan_invocation_ids.assign(orphans.begin(), orphans.end());
  for (const auto& inv : store.invocations) {
    auto it = import_totals.find(inv.invocation_id);
    if (inv.cold_start && it != import_totals.end() && it->second > inv.e2e_time_us) {
      result.report.warnings.push_back("invocation '" + inv.invocation_id +
                                       "' has import time exceeding its end-to-end time");
    }
  }
  return result;
}

RecordBatch parse_batch(std::string_view text) {
  RecordBatch batch;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      try {
        batch.push_back(parse_record(line));
      } catch (const Error& e) {
        throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return batch;
}

RecordBatch read_batch_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_batch(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string serialize_store(const ProfileStore& store) {
  std::string out;
  auto append = [&out](const ProfileRecord& r) {
    out += serialize_record(r);
    out += '\n';
  };
  for (const auto& m : store.metas) append(m);
  for (const auto& e : store.invocations) append(e);
  for (const auto& i : store.imports) append(i);
  for (const auto& s : store.samples) append(s);
  return out;
}

}  // namespace pgo
