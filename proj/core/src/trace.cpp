#include "ncc/trace.hpp"

#include <array>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace ncc {

namespace {

constexpr std::array<std::string_view, kTraceKindCount> kNames = {
    "tx_begin", "read",     "write",       "commit",      "abort",   "send",    "execute",
    "release",  "decide",   "early_abort", "ro_abort",    "smart_retry", "recover", "gc",
};

}  // namespace

std::string_view to_string(TraceKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::optional<TraceKind> trace_kind_from(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

std::string to_line(const TraceRecord& r) {
  std::string s;
  s.reserve(128);
  s += "{\"time\":";
  s += std::to_string(r.time);
  s += ",\"node\":";
  s += std::to_string(r.node);
  s += ",\"kind\":\"";
  s += to_string(r.kind);
  s += "\",\"tx\":\"";
  s += r.tx.str();
  s += "\",\"key\":";
  s += std::to_string(r.key);
  s += ",\"version\":\"";
  s += r.version.str();
  s += "\",\"order\":\"";
  s += r.order.str();
  s += "\",\"digest\":";
  s += std::to_string(r.digest);
  s += ",\"aux\":";
  s += std::to_string(r.aux);
  s += "}";
  return s;
}

std::optional<TraceRecord> parse_line(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    TraceRecord r;
    auto kind = trace_kind_from(j.at("kind").get<std::string>());
    auto tx = Timestamp::parse(j.at("tx").get<std::string>());
    if (!kind || !tx) return std::nullopt;
    r.kind = *kind;
    r.tx = *tx;
    r.time = j.at("time").get<std::int64_t>();
    r.node = j.at("node").get<NodeId>();
    r.key = j.value("key", Key{0});
    if (j.contains("version")) {
      auto v = Timestamp::parse(j.at("version").get<std::string>());
      if (!v) return std::nullopt;
      r.version = *v;
    }
    if (j.contains("order")) {
      auto o = Timestamp::parse(j.at("order").get<std::string>());
      if (!o) return std::nullopt;
      r.order = *o;
    }
    r.digest = j.value("digest", std::uint64_t{0});
    r.aux = j.value("aux", std::uint64_t{0});
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void write_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) os << to_line(r) << '\n';
}

TraceReadResult read_trace(std::istream& is) {
  TraceReadResult out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    auto r = parse_line(line);
    if (!r) {
      out.bad_line = n;
      return out;
    }
    out.records.push_back(*r);
  }
  return out;
}

std::uint64_t trace_fingerprint(const std::vector<TraceRecord>& records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : records) {
    for (char c : to_line(r)) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ncc
