#include "ncc/baseline_client.hpp"

#include <algorithm>

namespace ncc {

BaselineClient::BaselineClient(Protocol p, ClientConfig cfg, Router route, Generator gen, MetricsCollector* metrics)
    : ClientBase(cfg, std::move(route), std::move(gen), metrics), protocol_(p) {}

void BaselineClient::begin(Attempt& a) {
  // Only MVTO has a dedicated read-only path.
  if (protocol_ != Protocol::mvto || a.prog.num_shots != 1) a.read_only = false;
  bind_tx(a, unique_ts(ctx_->now()));
  a.phase = kExecute;
  send_shot(a);
}

void BaselineClient::send_shot(Attempt& a) {
  std::vector<Op> ops = a.shot == 0 ? a.prog.first : a.prog.next(a.shot, a.results);
  route_shot(a, std::move(ops));
  const auto round = ++a.rounds;
  for (const auto& [server, slots] : a.shot_slots) {
    Message m;
    m.kind = MsgKind::ExecuteReq;
    m.to = server;
    m.tx = a.tx;
    m.ts = a.tx;
    m.shot = a.shot;
    m.round = round;
    m.read_only = a.read_only;
    m.last_shot = a.shot + 1 >= a.prog.num_shots;
    m.client = ctx_->self();
    for (auto i : slots) m.ops.push_back(a.shot_ops[i]);
    ctx_->send(std::move(m));
  }
  if (a.pending == 0) after_execute(a);
}

void BaselineClient::after_execute(Attempt& a) {
  if (a.shot + 1 < a.prog.num_shots) {
    ++a.shot;
    send_shot(a);
    return;
  }
  switch (protocol_) {
    case Protocol::docc:
    case Protocol::d2pl_ww:
      prepare(a);
      return;
    case Protocol::mvto:
      if (a.read_only) {
        finish_commit(a, Outcome::committed, a.tx);
        return;
      }
      commit(a);
      return;
    default:
      commit(a);
      return;
  }
}

void BaselineClient::prepare(Attempt& a) {
  a.phase = kPrepare;
  a.acked.clear();
  a.pending = static_cast<std::uint32_t>(a.requests.size());
  const auto round = ++a.rounds;
  std::map<NodeId, std::vector<Op>> per;
  if (protocol_ == Protocol::docc) {
    for (std::size_t i = 0; i < a.all_ops.size(); ++i) {
      Op op = a.all_ops[i];
      if (op.kind == OpKind::read) op.version = a.results[i].version;
      per[route_(op.key)].push_back(op);
    }
  }
  for (const auto& [server, n] : a.requests) {
    Message m;
    m.kind = MsgKind::PrepareReq;
    m.to = server;
    m.tx = a.tx;
    m.ts = a.tx;
    m.round = round;
    if (auto it = per.find(server); it != per.end()) m.ops = std::move(it->second);
    ctx_->send(std::move(m));
  }
}

void BaselineClient::commit(Attempt& a) {
  send_to_participants(a, MsgKind::CommitAbort, Decision::committed, ++a.rounds);
  finish_commit(a, Outcome::committed, a.tx);
}

void BaselineClient::abort_attempt(Attempt& a) {
  send_to_participants(a, MsgKind::CommitAbort, Decision::aborted, ++a.rounds);
  finish_abort(a, Outcome::aborted_conflict);
}

void BaselineClient::handle(Attempt& a, const Message& m) {
  auto seen = [&a](NodeId n) {
    if (std::find(a.acked.begin(), a.acked.end(), n) != a.acked.end()) return true;
    a.acked.push_back(n);
    return false;
  };
  switch (m.kind) {
    case MsgKind::ExecuteResp:
      if (a.phase != kExecute || m.shot != a.shot || a.shot_slots.count(m.from) == 0 || seen(m.from)) return;
      if (!m.ok) {
        a.failed.push_back(m.from);
        abort_attempt(a);
        return;
      }
      store_results(a, m.from, m.results);
      if (--a.pending == 0) after_execute(a);
      return;
    case MsgKind::PrepareResp:
      if (a.phase != kPrepare || seen(m.from)) return;
      if (!m.ok) {
        a.failed.push_back(m.from);
        abort_attempt(a);
        return;
      }
      if (--a.pending == 0) commit(a);
      return;
    case MsgKind::Wound:
      abort_attempt(a);
      return;
    default:
      return;
  }
}

}  // namespace ncc
