#pragma once

// Workload-shift trigger over entry-point invocation streams. Invocations are
// counted in tumbling windows of width window_ms aligned to the first event;
// a boundary fires when the l1 distance between the invocation-probability
// vectors of the two adjacent windows exceeds epsilon.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgo/profile_model.hpp"

namespace pgo {

struct AdaptiveConfig {
  std::int64_t window_ms = 43'200'000;  // 12 h
  double epsilon = 0.002;
};

struct Window {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::map<std::string, std::int64_t> counts;

  std::int64_t total() const;
  bool empty() const { return total() == 0; }
};

/// nullopt for a window without traffic (the distribution is undefined).
std::optional<std::map<std::string, double>> probabilities(const Window& w);

struct TriggerDecision {
  std::size_t window_index = 0;  // index of the later window of the pair
  std::int64_t window_end_ms = 0;
  double total_delta = 0.0;
  bool fired = false;
  bool empty_window = false;  // either side had no traffic; nothing evaluated
  std::map<std::string, double> per_entry_delta;  // p(cur) - p(prev)
};

TriggerDecision delta(const Window& prev, const Window& cur, double epsilon);

struct TriggerTimeline {
  std::vector<Window> windows;
  std::vector<TriggerDecision> decisions;  // one per adjacent pair

  std::vector<std::size_t> fired_windows() const;
};

/// One trace row: a single invocation, or a pre-bucketed count.
struct TraceRow {
  std::string app_id;
  std::string entry_point;
  std::int64_t timestamp_ms = 0;
  std::int64_t count = 1;
};

struct TraceParse {
  std::vector<TraceRow> rows;
  std::size_t malformed = 0;
  bool bucketed = false;
};

/// Accepts `app_id,entry_point,timestamp_ms` or
/// `app_id,entry_point,window_start_ms,count`. Malformed rows are skipped and
/// counted; an unrecognized header throws UnknownFormat.
TraceParse parse_trace_csv(std::string_view text);

std::string trace_csv_header(bool bucketed);

/// Throws EmptyStream when there are no rows.
TriggerTimeline run_trace(std::span<const TraceRow> rows, const AdaptiveConfig& cfg);
TriggerTimeline run_stream(std::span<const InvocationEvent> events, const AdaptiveConfig& cfg);

/// Incremental form of run_trace for a live feed. A window is closed once an
/// event at least window_ms/10 past its end has been seen; rows for closed
/// windows are dropped and counted. Feeding a sorted trace and calling finish
/// reproduces run_trace's decisions.
class StreamingController {
 public:
  explicit StreamingController(AdaptiveConfig cfg);

  /// Decisions for windows closed by this row.
  std::vector<TriggerDecision> push(const TraceRow& row);
  std::vector<TriggerDecision> finish();

  std::size_t late_rows() const { return late_; }

 private:
  std::vector<TriggerDecision> close_through(std::int64_t window_index);

  AdaptiveConfig cfg_;
  std::optional<std::int64_t> origin_;
  std::map<std::int64_t, Window> open_;
  std::optional<Window> last_closed_;
  std::int64_t next_to_close_ = 0;
  std::int64_t max_seen_ = 0;
  std::size_t late_ = 0;
};

/// Single-line JSON trigger record appended to triggers.jsonl.
std::string trigger_record_json(const std::string& app_id, const TriggerDecision& d);

}  // namespace pgo
