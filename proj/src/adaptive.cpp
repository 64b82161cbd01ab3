#include "pgo/adaptive.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "pgo/error.hpp"
#include "pgo/kernels.hpp"

namespace pgo {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::int64_t Window::total() const {
  std::int64_t t = 0;
  for (const auto& [e, n] : counts) t += n;
  return t;
}

std::optional<std::map<std::string, double>> probabilities(const Window& w) {
  const std::int64_t total = w.total();
  if (total == 0) return std::nullopt;
  std::map<std::string, double> p;
  for (const auto& [e, n] : w.counts) p[e] = static_cast<double>(n) / static_cast<double>(total);
  return p;
}

TriggerDecision delta(const Window& prev, const Window& cur, double epsilon) {
  TriggerDecision d;
  d.window_end_ms = cur.end_ms;
  const auto p0 = probabilities(prev);
  const auto p1 = probabilities(cur);
  if (!p0 || !p1) {
    d.empty_window = true;
    return d;
  }
  std::set<std::string> entries;
  for (const auto& [e, v] : *p0) entries.insert(e);
  for (const auto& [e, v] : *p1) entries.insert(e);
  for (const auto& e : entries) {
    const auto a = p0->find(e);
    const auto b = p1->find(e);
    const double dp = (b == p1->end() ? 0.0 : b->second) - (a == p0->end() ? 0.0 : a->second);
    d.per_entry_delta[e] = dp;
    d.total_delta += std::fabs(dp);
  }
  d.fired = d.total_delta > epsilon;
  return d;
}

std::vector<std::size_t> TriggerTimeline::fired_windows() const {
  std::vector<std::size_t> out;
  for (const auto& d : decisions) {
    if (d.fired) out.push_back(d.window_index);
  }
  return out;
}

std::string trace_csv_header(bool bucketed) {
  return bucketed ? "app_id,entry_point,window_start_ms,count" : "app_id,entry_point,timestamp_ms";
}

TraceParse parse_trace_csv(std::string_view text) {
  TraceParse out;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 3 && fields[0] == "app_id" && fields[1] == "entry_point" && fields[2] == "timestamp_ms") {
        out.bucketed = false;
      } else if (fields.size() == 4 && fields[0] == "app_id" && fields[1] == "entry_point" &&
                 fields[2] == "window_start_ms" && fields[3] == "count") {
        out.bucketed = true;
      } else {
        throw Error(ErrorKind::UnknownFormat, "unrecognized trace header: " + std::string(line));
      }
      continue;
    }
    TraceRow row;
    const std::size_t want = out.bucketed ? 4 : 3;
    if (fields.size() != want || fields[0].empty() || fields[1].empty() || !parse_int(fields[2], row.timestamp_ms) ||
        (out.bucketed && (!parse_int(fields[3], row.count) || row.count < 0))) {
      ++out.malformed;
      continue;
    }
    row.app_id = std::string(fields[0]);
    row.entry_point = std::string(fields[1]);
    out.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorKind::UnknownFormat, "trace has no header");
  return out;
}

TriggerTimeline run_trace(std::span<const TraceRow> rows, const AdaptiveConfig& cfg) {
  if (rows.empty()) throw Error(ErrorKind::EmptyStream, "invocation stream is empty");
  if (cfg.window_ms <= 0) throw Error(ErrorKind::Config, "window_ms must be positive");
  std::set<std::string> entry_set;
  std::int64_t first = rows.front().timestamp_ms;
  std::int64_t last = first;
  for (const auto& r : rows) {
    entry_set.insert(r.entry_point);
    first = std::min(first, r.timestamp_ms);
    last = std::max(last, r.timestamp_ms);
  }
  const std::vector<std::string> entries(entry_set.begin(), entry_set.end());
  std::vector<kernels::Hit> hits;
  hits.reserve(rows.size());
  for (const auto& r : rows) {
    const auto idx = std::lower_bound(entries.begin(), entries.end(), r.entry_point) - entries.begin();
    hits.push_back({static_cast<std::size_t>(idx), r.timestamp_ms, r.count});
  }
  const auto n_windows = static_cast<std::size_t>((last - first) / cfg.window_ms + 1);
  const auto counts = kernels::window_counts(hits, first, cfg.window_ms, n_windows, entries.size());

  TriggerTimeline tl;
  tl.windows.resize(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    Window& win = tl.windows[w];
    win.start_ms = first + static_cast<std::int64_t>(w) * cfg.window_ms;
    win.end_ms = win.start_ms + cfg.window_ms;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto c = counts[w * entries.size() + e];
      if (c > 0) win.counts[entries[e]] = c;
    }
  }
  for (std::size_t w = 1; w < n_windows; ++w) {
    auto d = delta(tl.windows[w - 1], tl.windows[w], cfg.epsilon);
    d.window_index = w;
    tl.decisions.push_back(std::move(d));
  }
  return tl;
}

TriggerTimeline run_stream(std::span<const InvocationEvent> events, const AdaptiveConfig& cfg) {
  std::vector<TraceRow> rows;
  rows.reserve(events.size());
  for (const auto& e : events) rows.push_back({"", e.entry_point, e.timestamp_ms, 1});
  return run_trace(rows, cfg);
}

StreamingController::StreamingController(AdaptiveConfig cfg) : cfg_(cfg) {
  if (cfg_.window_ms <= 0) throw Error(ErrorKind::Config, "window_ms must be positive");
}

std::vector<TriggerDecision> StreamingController::close_through(std::int64_t window_index) {
  std::vector<TriggerDecision> out;
  for (; next_to_close_ <= window_index; ++next_to_close_) {
    Window w;
    if (auto it = open_.find(next_to_close_); it != open_.end()) {
      w = std::move(it->second);
      open_.erase(it);
    }
    w.start_ms = *origin_ + next_to_close_ * cfg_.window_ms;
    w.end_ms = w.start_ms + cfg_.window_ms;
    if (last_closed_) {
      auto d = delta(*last_closed_, w, cfg_.epsilon);
      d.window_index = static_cast<std::size_t>(next_to_close_);
      out.push_back(std::move(d));
    }
    last_closed_ = std::move(w);
  }
  return out;
}

std::vector<TriggerDecision> StreamingController::push(const TraceRow& row) {
  if (!origin_) {
    origin_ = row.timestamp_ms;
    max_seen_ = row.timestamp_ms;
  }
  if (row.timestamp_ms < *origin_) {
    ++late_;
    return {};
  }
  const std::int64_t idx = (row.timestamp_ms - *origin_) / cfg_.window_ms;
  if (idx < next_to_close_) {
    ++late_;
    return {};
  }
  if (row.count > 0) open_[idx].counts[row.entry_point] += row.count;
  max_seen_ = std::max(max_seen_, row.timestamp_ms);
  // Window k is final once time has passed its end by the grace period.
  const std::int64_t grace = cfg_.window_ms / 10;
  const std::int64_t closable = (max_seen_ - grace - *origin_) / cfg_.window_ms - 1;
  if (max_seen_ - grace - *origin_ < 0) return {};
  return close_through(closable);
}

std::vector<TriggerDecision> StreamingController::finish() {
  if (!origin_) return {};
  std::int64_t last = next_to_close_ - 1;
  for (const auto& [idx, w] : open_) last = std::max(last, idx);
  return close_through(last);
}

std::string trigger_record_json(const std::string& app_id, const TriggerDecision& d) {
  nlohmann::ordered_json j;
  j["app"] = app_id;
  j["window"] = d.window_index;
  j["window_end_ms"] = d.window_end_ms;
  j["total_delta"] = d.total_delta;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [e, v] : d.per_entry_delta) per[e] = v;
  j["per_entry_delta"] = std::move(per);
  return j.dump();
}

}  // namespace pgo
