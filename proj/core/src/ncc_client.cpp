#include "ncc/ncc_client.hpp"

#include <algorithm>
#include <cmath>

namespace ncc {

SafeguardResult safeguard_check(const std::vector<TimestampPair>& pairs) {
  if (pairs.empty()) return {};
  Timestamp tw = pairs.front().t_w;
  Timestamp tr = pairs.front().t_r;
  for (const auto& p : pairs) {
    tw = std::max(tw, p.t_w);
    tr = std::min(tr, p.t_r);
  }
  return {tw <= tr, tw};
}

NccClient::NccClient(ClientConfig cfg, NccClientConfig ncfg, Router route, Generator gen,
                     MetricsCollector* metrics)
    : ClientBase(cfg, std::move(route), std::move(gen), metrics), ncfg_(ncfg) {}

Timestamp NccClient::asynchrony_aware_ts(std::int64_t now, const std::vector<NodeId>& servers) const {
  double best = 0;
  bool any = false;
  for (auto s : servers) {
    double d = 0;
    if (auto it = profiles_.find(s); it != profiles_.end() && it->second.sampled) d = it->second.t_delta;
    best = any ? std::max(best, d) : d;
    any = true;
  }
  return {now + static_cast<std::int64_t>(std::llround(best)), config().client_id};
}

void NccClient::update_t_delta(NodeId server, std::int64_t t_c, std::int64_t t_s) {
  auto& p = profiles_[server];
  auto sample = static_cast<double>(t_s - t_c);
  if (!p.sampled) {
    p.t_delta = sample;
    p.sampled = true;
  } else {
    p.t_delta = (1.0 - ncfg_.delta_weight) * p.t_delta + ncfg_.delta_weight * sample;
  }
}

void NccClient::set_t_delta(NodeId server, double d) {
  auto& p = profiles_[server];
  p.t_delta = d;
  p.sampled = true;
}

void NccClient::note_token(NodeId server, const RoToken& t) {
  auto& cur = profiles_[server].token;
  if (t.seq >= cur.seq) cur = t;
}

void NccClient::begin(Attempt& a) {
  if (a.read_only && (!ncfg_.read_only_path || a.prog.num_shots != 1)) a.read_only = false;
  std::vector<NodeId> servers;
  for (const auto& op : a.prog.first) servers.push_back(route_(op.key));
  std::sort(servers.begin(), servers.end());
  servers.erase(std::unique(servers.begin(), servers.end()), servers.end());
  std::vector<NodeId> basis = servers;
  if (a.prog.num_shots > 1) {
    for (const auto& [s, p] : profiles_) basis.push_back(s);
  }
  auto t = asynchrony_aware_ts(ctx_->now(), basis);
  std::int64_t phys = t.physical;
  if (a.read_only) {
    for (auto s : servers) {
      if (auto it = profiles_.find(s); it != profiles_.end()) {
        phys = std::max(phys, it->second.token.t_ro.physical + 1);
      }
    }
  }
  bind_tx(a, unique_ts(phys));
  a.backup = a.read_only || servers.empty() ? kNoNode : servers.front();
  a.phase = kExecute;
  send_shot(a);
}

void NccClient::send_shot(Attempt& a) {
  std::vector<Op> ops = a.shot == 0 ? a.prog.first : a.prog.next(a.shot, a.results);
  route_shot(a, std::move(ops));
  const auto round = ++a.rounds;
  const bool last = a.shot + 1 >= a.prog.num_shots;
  std::vector<CohortEntry> cohorts;
  if (last && !a.read_only) {
    for (const auto& [s, n] : a.requests) cohorts.push_back({s, n});
    if (a.backup != kNoNode && a.shot_slots.count(a.backup) == 0) {
      Message n;
      n.kind = MsgKind::CohortNotice;
      n.to = a.backup;
      n.tx = a.tx;
      n.ts = a.tx;
      n.round = round;
      n.cohorts = cohorts;
      ++a.pending;
      ctx_->send(std::move(n));
    }
  }
  const auto now = ctx_->now();
  for (const auto& [server, slots] : a.shot_slots) {
    Message m;
    m.kind = MsgKind::ExecuteReq;
    m.to = server;
    m.tx = a.tx;
    m.ts = a.tx;
    m.shot = a.shot;
    m.round = round;
    m.read_only = a.read_only;
    m.last_shot = last;
    m.backup = a.backup;
    m.client = ctx_->self();
    m.t_c = now;
    if (a.read_only) m.token = profiles_[server].token;
    m.ops.reserve(slots.size());
    for (auto i : slots) m.ops.push_back(a.shot_ops[i]);
    if (last && server == a.backup) m.cohorts = cohorts;
    ctx_->send(std::move(m));
  }
  if (a.pending == 0) on_shot_done(a);
}

void NccClient::on_shot_done(Attempt& a) {
  if (a.shot + 1 < a.prog.num_shots) {
    ++a.shot;
    send_shot(a);
    return;
  }
  safeguard(a);
}

void NccClient::safeguard(Attempt& a) {
  std::vector<TimestampPair> pairs;
  pairs.reserve(a.results.size());
  for (const auto& r : a.results) pairs.push_back(r.pair);
  auto sg = safeguard_check(pairs);
  if (sg.ok) {
    if (!a.read_only) send_to_participants(a, MsgKind::CommitAbort, Decision::committed, ++a.rounds);
    finish_commit(a, a.delayed ? Outcome::committed_delayed : Outcome::committed, sg.t_prime);
    return;
  }
  if (a.read_only) {
    finish_abort(a, Outcome::aborted_retry);
    return;
  }
  a.phase = kSmartRetry;
  a.commit_ts = sg.t_prime;
  a.acked.clear();
  a.pending = static_cast<std::uint32_t>(a.requests.size());
  a.delayed = false;
  const auto round = ++a.rounds;
  for (const auto& [server, n] : a.requests) {
    Message m;
    m.kind = MsgKind::SmartRetryReq;
    m.to = server;
    m.tx = a.tx;
    m.ts = sg.t_prime;
    m.round = round;
    ctx_->send(std::move(m));
  }
}

void NccClient::abort_attempt(Attempt& a, Outcome o) {
  send_to_participants(a, MsgKind::CommitAbort, Decision::aborted, ++a.rounds);
  finish_abort(a, o);
}

void NccClient::handle(Attempt& a, const Message& m) {
  auto seen = [&a](NodeId n) {
    if (std::find(a.acked.begin(), a.acked.end(), n) != a.acked.end()) return true;
    a.acked.push_back(n);
    return false;
  };
  switch (m.kind) {
    case MsgKind::ExecuteResp:
      if (a.phase != kExecute || m.shot != a.shot || a.shot_slots.count(m.from) == 0 || seen(m.from)) return;
      update_t_delta(m.from, m.t_c, m.t_s);
      note_token(m.from, m.token);
      store_results(a, m.from, m.results);
      if (--a.pending == 0) on_shot_done(a);
      return;
    case MsgKind::CohortAck:
      if (a.phase != kExecute || m.round != a.rounds || seen(kNoNode)) return;
      if (!m.ok) {
        abort_attempt(a, Outcome::aborted_recovery);
        return;
      }
      if (--a.pending == 0) on_shot_done(a);
      return;
    case MsgKind::EarlyAbortResp:
      if (a.phase != kExecute) return;
      a.failed.push_back(m.from);
      abort_attempt(a, Outcome::aborted_early);
      return;
    case MsgKind::RoAbortResp:
      note_token(m.from, m.token);
      finish_abort(a, Outcome::aborted_ro);
      return;
    case MsgKind::SmartRetryResp:
      if (a.phase != kSmartRetry || seen(m.from)) return;
      if (!m.ok) a.delayed = true;  // reused as "some participant refused"
      if (--a.pending > 0) return;
      if (a.delayed) {
        abort_attempt(a, Outcome::aborted_retry);
      } else {
        send_to_participants(a, MsgKind::CommitAbort, Decision::committed, ++a.rounds);
        finish_commit(a, Outcome::committed_retry, a.commit_ts);
      }
      return;
    case MsgKind::DecisionNotice:
      if (m.decision == Decision::aborted) finish_abort(a, Outcome::aborted_recovery);
      return;
    default:
      return;
  }
}

}  // namespace ncc
