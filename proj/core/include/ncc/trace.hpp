#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncc/types.hpp"

namespace ncc {

// History kinds are always recorded; the rest only at TraceLevel::full.
enum class TraceKind : std::uint8_t {
  tx_begin,
  read,
  write,
  commit,
  abort,
  send,
  execute,
  release,
  decide,
  early_abort,
  ro_abort,
  smart_retry,
  recover,
  gc,
};

inline constexpr int kTraceKindCount = 14;

std::string_view to_string(TraceKind k);
std::optional<TraceKind> trace_kind_from(std::string_view s);

enum class TraceLevel : std::uint8_t { history, full };

// aux meaning by kind:
//   commit      rounds used by the attempt; +1000 when recorded by a backup coordinator
//   send        message kind | round << 8
//   decide      decision (1 committed, 2 aborted)
struct TraceRecord {
  std::int64_t time = 0;  // global virtual time
  NodeId node = kNoNode;
  TraceKind kind = TraceKind::tx_begin;
  TxId tx;
  Key key = 0;
  TxId version;
  Timestamp order;
  std::uint64_t digest = 0;
  std::uint64_t aux = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline constexpr std::uint64_t kBackupCommitFlag = 1000;

class Trace {
 public:
  explicit Trace(TraceLevel level = TraceLevel::history) : level_(level) {}

  bool full() const { return level_ == TraceLevel::full; }
  TraceLevel level() const { return level_; }
  void set_level(TraceLevel l) { level_ = l; }

  void add(const TraceRecord& r) { records_.push_back(r); }
  void add_full(const TraceRecord& r) {
    if (full()) records_.push_back(r);
  }

  const std::vector<TraceRecord>& records() const { return records_; }
  std::vector<TraceRecord>& records() { return records_; }
  void clear() { records_.clear(); }

 private:
  TraceLevel level_;
  std::vector<TraceRecord> records_;
};

std::string to_line(const TraceRecord& r);
std::optional<TraceRecord> parse_line(std::string_view line);

void write_trace(std::ostream& os, const std::vector<TraceRecord>& records);

struct TraceReadResult {
  std::vector<TraceRecord> records;
  std::size_t bad_line = 0;  // 1-based line number of the first unparsable line, 0 if none
};

TraceReadResult read_trace(std::istream& is);

// FNV-1a over the serialized lines.
std::uint64_t trace_fingerprint(const std::vector<TraceRecord>& records);

}  // namespace ncc
