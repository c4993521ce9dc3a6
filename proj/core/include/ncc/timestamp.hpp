#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ncc {

using ClientId = std::uint32_t;

// Creator id of the implicit initial version of every key.
inline constexpr ClientId kReservedClient = 0xffffffffu;

struct Timestamp {
  std::int64_t physical = 0;
  ClientId client_id = 0;

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
  friend constexpr bool operator==(const Timestamp&, const Timestamp&) = default;

  // Arithmetic touches the physical component only.
  constexpr Timestamp plus(std::int64_t d) const { return {physical + d, client_id}; }
  constexpr Timestamp next() const { return plus(1); }

  // "physical.client_id", e.g. "1004.3".
  std::string str() const;
  static std::optional<Timestamp> parse(std::string_view s);
};

enum class Ordering { less, equal, greater };

Ordering ts_compare(const Timestamp& a, const Timestamp& b);

// A transaction attempt is named by its pre-assigned timestamp.
using TxId = Timestamp;

inline constexpr TxId kInitTx{0, kReservedClient};

struct TimestampHash {
  std::size_t operator()(const Timestamp& t) const noexcept;
};

}  // namespace ncc
