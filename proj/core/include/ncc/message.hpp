#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncc/types.hpp"

namespace ncc {

enum class MsgKind : std::uint8_t {
  ExecuteReq,
  ExecuteResp,
  CommitAbort,
  SmartRetryReq,
  SmartRetryResp,
  EarlyAbortResp,
  RoAbortResp,
  RecoverQuery,
  RecoverReply,
  RecoverTrigger,
  DecisionNotice,
  CohortNotice,
  CohortAck,
  PrepareReq,
  PrepareResp,
  Wound,
};

inline constexpr int kMsgKindCount = 16;

std::string_view to_string(MsgKind k);
std::optional<MsgKind> msg_kind_from(std::string_view s);

struct Op {
  Key key = 0;
  OpKind kind = OpKind::read;
  Value value;   // writes only
  TxId version;  // observed version, used by validation-based protocols

  friend bool operator==(const Op&, const Op&) = default;
};

struct OpResult {
  Key key = 0;
  OpKind kind = OpKind::read;
  Value value;
  TxId version;  // version read, or version created
  TimestampPair pair;
  bool delayed = false;

  friend bool operator==(const OpResult&, const OpResult&) = default;
};

struct CohortEntry {
  NodeId server = kNoNode;
  std::uint32_t requests = 0;

  friend bool operator==(const CohortEntry&, const CohortEntry&) = default;
};

// Per-server read-only freshness token: the largest committed t_w and the
// commit sequence number at which it was observed.
struct RoToken {
  Timestamp t_ro = kInitTx;
  std::uint64_t seq = 0;

  friend bool operator==(const RoToken&, const RoToken&) = default;
};

enum class SrState : std::uint8_t { none, success, failure };

struct Message {
  MsgKind kind = MsgKind::ExecuteReq;
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  TxId tx;
  Timestamp ts;  // pre-assigned t, or t' for smart retry
  std::uint16_t shot = 0;
  std::uint16_t round = 0;
  bool read_only = false;
  bool last_shot = false;
  bool ok = true;
  Decision decision = Decision::undecided;
  NodeId backup = kNoNode;
  NodeId client = kNoNode;
  std::int64_t t_c = 0;  // client send time, echoed back
  std::int64_t t_s = 0;  // server execution time
  RoToken token;
  SrState sr = SrState::none;
  std::uint32_t executed = 0;
  std::vector<Op> ops;
  std::vector<OpResult> results;
  std::vector<CohortEntry> cohorts;

  friend bool operator==(const Message&, const Message&) = default;
};

std::string encode(const Message& m);
std::optional<Message> decode(std::string_view text);

}  // namespace ncc
