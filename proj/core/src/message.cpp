#include "ncc/message.hpp"

#include <array>

#include "json.hpp"

namespace ncc {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kMsgKindCount> kKindNames = {
    "ExecuteReq",   "ExecuteResp",    "CommitAbort",  "SmartRetryReq",
    "SmartRetryResp", "EarlyAbortResp", "RoAbortResp", "RecoverQuery",
    "RecoverReply", "RecoverTrigger", "DecisionNotice", "CohortNotice",
    "CohortAck",    "PrepareReq",     "PrepareResp",  "Wound",
};

Timestamp ts_of(const json& j) {
  auto t = Timestamp::parse(j.get<std::string>());
  if (!t) throw std::invalid_argument("bad timestamp");
  return *t;
}

json value_json(const Value& v) { return json::array({v.digest, v.size}); }

Value value_of(const json& j) { return {j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint32_t>()}; }

std::optional<Decision> decision_from(std::string_view s) {
  if (s == "undecided") return Decision::undecided;
  if (s == "committed") return Decision::committed;
  if (s == "aborted") return Decision::aborted;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(OpKind k) { return k == OpKind::read ? "read" : "write"; }

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::undecided: return "undecided";
    case Decision::committed: return "committed";
    case Decision::aborted: return "aborted";
  }
  return "?";
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::ncc: return "ncc";
    case Protocol::ncc_rw: return "ncc-rw";
    case Protocol::docc: return "docc";
    case Protocol::d2pl_nw: return "d2pl-nw";
    case Protocol::d2pl_ww: return "d2pl-ww";
    case Protocol::mvto: return "mvto";
  }
  return "?";
}

std::optional<Protocol> protocol_from(std::string_view s) {
  for (auto p : {Protocol::ncc, Protocol::ncc_rw, Protocol::docc, Protocol::d2pl_nw,
                 Protocol::d2pl_ww, Protocol::mvto}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::string_view to_string(MsgKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<MsgKind> msg_kind_from(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<MsgKind>(i);
  }
  return std::nullopt;
}

std::string encode(const Message& m) {
  json j;
  j["kind"] = to_string(m.kind);
  j["from"] = m.from;
  j["to"] = m.to;
  j["tx"] = m.tx.str();
  j["ts"] = m.ts.str();
  j["shot"] = m.shot;
  j["round"] = m.round;
  j["read_only"] = m.read_only;
  j["last_shot"] = m.last_shot;
  j["ok"] = m.ok;
  j["decision"] = to_string(m.decision);
  j["backup"] = m.backup;
  j["client"] = m.client;
  j["t_c"] = m.t_c;
  j["t_s"] = m.t_s;
  j["token"] = json::array({m.token.t_ro.str(), m.token.seq});
  j["sr"] = static_cast<int>(m.sr);
  j["executed"] = m.executed;
  auto ops = json::array();
  for (const auto& op : m.ops) {
    ops.push_back(json::array({op.key, to_string(op.kind), value_json(op.value), op.version.str()}));
  }
  j["ops"] = std::move(ops);
  auto res = json::array();
  for (const auto& r : m.results) {
    res.push_back(json::array({r.key, to_string(r.kind), value_json(r.value), r.version.str(),
                               r.pair.t_w.str(), r.pair.t_r.str(), r.delayed}));
  }
  j["results"] = std::move(res);
  auto coh = json::array();
  for (const auto& c : m.cohorts) coh.push_back(json::array({c.server, c.requests}));
  j["cohorts"] = std::move(coh);
  return j.dump();
}

std::optional<Message> decode(std::string_view text) {
  try {
    auto j = json::parse(text);
    Message m;
    auto kind = msg_kind_from(j.at("kind").get<std::string>());
    auto dec = decision_from(j.at("decision").get<std::string>());
    if (!kind || !dec) return std::nullopt;
    m.kind = *kind;
    m.decision = *dec;
    m.from = j.at("from").get<NodeId>();
    m.to = j.at("to").get<NodeId>();
    m.tx = ts_of(j.at("tx"));
    m.ts = ts_of(j.at("ts"));
    m.shot = j.at("shot").get<std::uint16_t>();
    m.round = j.at("round").get<std::uint16_t>();
    m.read_only = j.at("read_only").get<bool>();
    m.last_shot = j.at("last_shot").get<bool>();
    m.ok = j.at("ok").get<bool>();
    m.backup = j.at("backup").get<NodeId>();
    m.client = j.at("client").get<NodeId>();
    m.t_c = j.at("t_c").get<std::int64_t>();
    m.t_s = j.at("t_s").get<std::int64_t>();
    m.token.t_ro = ts_of(j.at("token").at(0));
    m.token.seq = j.at("token").at(1).get<std::uint64_t>();
    int sr = j.at("sr").get<int>();
    if (sr < 0 || sr > 2) return std::nullopt;
    m.sr = static_cast<SrState>(sr);
    m.executed = j.at("executed").get<std::uint32_t>();
    for (const auto& o : j.at("ops")) {
      Op op;
      op.key = o.at(0).get<Key>();
      op.kind = o.at(1).get<std::string>() == "write" ? OpKind::write : OpKind::read;
      op.value = value_of(o.at(2));
      op.version = ts_of(o.at(3));
      m.ops.push_back(op);
    }
    for (const auto& o : j.at("results")) {
      OpResult r;
      r.key = o.at(0).get<Key>();
      r.kind = o.at(1).get<std::string>() == "write" ? OpKind::write : OpKind::read;
      r.value = value_of(o.at(2));
      r.version = ts_of(o.at(3));
      r.pair = {ts_of(o.at(4)), ts_of(o.at(5))};
      r.delayed = o.at(6).get<bool>();
      m.results.push_back(r);
    }
    for (const auto& c : j.at("cohorts")) {
      m.cohorts.push_back({c.at(0).get<NodeId>(), c.at(1).get<std::uint32_t>()});
    }
    return m;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace ncc
