#include "ncc/timestamp.hpp"

#include <charconv>

#include "ncc/rng.hpp"

namespace ncc {

std::string Timestamp::str() const {
  return std::to_string(physical) + "." + std::to_string(client_id);
}

std::optional<Timestamp> Timestamp::parse(std::string_view s) {
  auto dot = s.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) return std::nullopt;
  Timestamp t;
  auto p = s.substr(0, dot);
  auto c = s.substr(dot + 1);
  auto r1 = std::from_chars(p.data(), p.data() + p.size(), t.physical);
  if (r1.ec != std::errc() || r1.ptr != p.data() + p.size()) return std::nullopt;
  auto r2 = std::from_chars(c.data(), c.data() + c.size(), t.client_id);
  if (r2.ec != std::errc() || r2.ptr != c.data() + c.size()) return std::nullopt;
  return t;
}

Ordering ts_compare(const Timestamp& a, const Timestamp& b) {
  auto c = a <=> b;
  if (c < 0) return Ordering::less;
  if (c > 0) return Ordering::greater;
  return Ordering::equal;
}

std::size_t TimestampHash::operator()(const Timestamp& t) const noexcept {
  return static_cast<std::size_t>(
      splitmix64(static_cast<std::uint64_t>(t.physical) * 0x9e3779b97f4a7c15ULL ^ t.client_id));
}

}  // namespace ncc
