#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "ncc/timestamp.hpp"

namespace ncc {

using Key = std::uint64_t;
using NodeId = std::uint32_t;

inline constexpr NodeId kNoNode = 0xffffffffu;

// Values are not materialized; a digest stands in for the bytes.
struct Value {
  std::uint64_t digest = 0;
  std::uint32_t size = 0;

  friend bool operator==(const Value&, const Value&) = default;
};

enum class OpKind : std::uint8_t { read, write };

enum class Decision : std::uint8_t { undecided, committed, aborted };

struct TimestampPair {
  Timestamp t_w;
  Timestamp t_r;

  friend bool operator==(const TimestampPair&, const TimestampPair&) = default;
};

enum class Protocol : std::uint8_t { ncc, ncc_rw, docc, d2pl_nw, d2pl_ww, mvto };

std::string_view to_string(OpKind k);
std::string_view to_string(Decision d);
std::string_view to_string(Protocol p);
std::optional<Protocol> protocol_from(std::string_view s);

inline bool is_ncc(Protocol p) { return p == Protocol::ncc || p == Protocol::ncc_rw; }

}  // namespace ncc
