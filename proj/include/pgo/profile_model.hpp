#pragma once

// Profile data model and the newline-delimited JSON wire format emitted by
// the sampling agent.
//
//   sample:     {"k":"sample","ts":<ms>,"inv":<str>,"ep":<str>,"fr":[[fn,file,line],...]}
//   import:     {"k":"imp","inv":<str>,"mod":<str>,"self_us":<int>}
//   invocation: {"k":"invk","ts":<ms>,"inv":<str>,"ep":<str>,"e2e_us":<int>,"cold":<bool>}
//   meta:       {"k":"meta","app":<str>,"agent_ver":<str>,"hz":<number>}
//
// Frames are root-first. Times are integers; self times exclude nested imports.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pgo {

struct CallFrame {
  std::string function_name;
  std::string file_path;
  std::int64_t line = 1;

  friend bool operator==(const CallFrame&, const CallFrame&) = default;
};

struct StackSample {
  std::int64_t timestamp_ms = 0;
  std::string invocation_id;
  std::string entry_point;
  std::vector<CallFrame> frames;  // frames.front() is the entry frame, back() the leaf

  friend bool operator==(const StackSample&, const StackSample&) = default;
};

struct ImportTiming {
  std::string module;
  std::int64_t self_time_us = 0;
  std::string invocation_id;

  friend bool operator==(const ImportTiming&, const ImportTiming&) = default;
};

struct InvocationEvent {
  std::int64_t timestamp_ms = 0;
  std::string entry_point;
  std::string invocation_id;
  std::int64_t e2e_time_us = 0;
  bool cold_start = false;

  friend bool operator==(const InvocationEvent&, const InvocationEvent&) = default;
};

struct MetaRecord {
  std::string app_id;
  std::string agent_version;
  double sampling_hz = 0.0;

  friend bool operator==(const MetaRecord&, const MetaRecord&) = default;
};

using ProfileRecord = std::variant<StackSample, ImportTiming, InvocationEvent, MetaRecord>;

/// Parses one wire-format line. Unknown extra fields are ignored; unknown
/// record kinds, missing fields and negative times throw MalformedRecord.
ProfileRecord parse_record(std::string_view line);

/// Canonical single-line serialization (no trailing newline). Byte identity of
/// this string is the duplicate criterion during merge.
std::string serialize_record(const ProfileRecord& record);

bool is_valid_module_name(std::string_view name);

/// Immutable after construction by validate_and_merge.
struct ProfileStore {
  std::string app_id;
  std::vector<MetaRecord> metas;
  std::vector<StackSample> samples;
  std::vector<ImportTiming> imports;
  std::vector<InvocationEvent> invocations;

  friend bool operator==(const ProfileStore&, const ProfileStore&) = default;
};

struct ValidationReport {
  std::vector<std::string> orphan_invocation_ids;  // sorted, unique
  std::size_t duplicates_removed = 0;
  std::vector<std::string> warnings;

  bool clean() const { return orphan_invocation_ids.empty() && warnings.empty(); }
};

struct MergeResult {
  ProfileStore store;
  ValidationReport report;
};

using RecordBatch = std::vector<ProfileRecord>;

/// Deterministic merge of agent batches. Throws EmptyInput when there are no
/// batches (or no records at all).
MergeResult validate_and_merge(const std::vector<RecordBatch>& batches);

/// Reads a `.pgoprof.jsonl` batch; blank lines are skipped. Errors carry the
/// 1-based line number.
RecordBatch parse_batch(std::string_view text);
RecordBatch read_batch_file(const std::string& path);

/// Serializes the store as a batch (meta, invocations, imports, samples).
std::string serialize_store(const ProfileStore& store);

}  // namespace pgo
