#include "ncc/client.hpp"

#include <algorithm>

namespace ncc {

namespace {

constexpr std::uint64_t kArrivalTimer = 0;
constexpr std::uint64_t kRetryTimer = 1;

}  // namespace

ClientBase::ClientBase(ClientConfig cfg, Router route, Generator gen, MetricsCollector* metrics)
    : route_(std::move(route)),
      rng_(Rng::derive(cfg.seed, 1000 + cfg.client_id)),
      cfg_(cfg),
      gen_(std::move(gen)),
      metrics_(metrics) {}

void ClientBase::on_start() {
  if (gen_ && cfg_.rate > 0) {
    auto first = cfg_.start_at + static_cast<std::int64_t>(rng_.exponential(1e6 / cfg_.rate));
    ctx_->set_timer(first, kArrivalTimer);
  }
}

void ClientBase::schedule_arrival() {
  auto gap = static_cast<std::int64_t>(rng_.exponential(1e6 / cfg_.rate));
  ctx_->set_timer(std::max<std::int64_t>(1, gap), kArrivalTimer);
}

void ClientBase::on_timer(std::uint64_t tag) {
  if (tag == kArrivalTimer) {
    if (ctx_->global_now() >= cfg_.stop_at) return;
    submit(gen_(rng_));
    schedule_arrival();
    return;
  }
  if ((tag & 0xf) == kRetryTimer) start(tag >> 4);
}

void ClientBase::submit(TxProgram prog, Callback cb) {
  if (attempts_.size() >= cfg_.max_outstanding) {
    if (backlog_.size() >= cfg_.backlog_cap) {
      if (metrics_ != nullptr) metrics_->note_dropped_arrival();
      return;
    }
    backlog_.emplace_back(std::move(prog), std::move(cb));
    return;
  }
  auto lid = next_lid_++;
  auto& a = attempts_[lid];
  a.lid = lid;
  a.prog = std::move(prog);
  a.cb = std::move(cb);
  start(lid);
}

void ClientBase::start(std::uint64_t lid) {
  auto it = attempts_.find(lid);
  if (it == attempts_.end()) return;
  Attempt& a = it->second;
  ++a.attempts;
  a.live = true;
  a.read_only = a.prog.read_only && !a.force_rw;
  a.shot = 0;
  a.rounds = 0;
  a.pending = 0;
  a.phase = 0;
  a.delayed = false;
  a.backup = kNoNode;
  a.commit_ts = {};
  a.shot_ops.clear();
  a.all_ops.clear();
  a.results.clear();
  a.shot_base = 0;
  a.shot_slots.clear();
  a.requests.clear();
  a.failed.clear();
  a.acked.clear();
  begin(a);
}

void ClientBase::on_message(const Message& m) {
  auto it = by_tx_.find(m.tx);
  if (it == by_tx_.end()) {
    handle_orphan(m);
    return;
  }
  auto ait = attempts_.find(it->second);
  if (ait == attempts_.end() || !ait->second.live) return;
  handle(ait->second, m);
}

Timestamp ClientBase::unique_ts(std::int64_t physical) {
  if (physical <= last_phys_) physical = last_phys_ + 1;
  last_phys_ = physical;
  return {physical, cfg_.client_id};
}

void ClientBase::bind_tx(Attempt& a, const TxId& tx) {
  a.tx = tx;
  a.begin = ctx_->global_now();
  by_tx_[tx] = a.lid;
  ctx_->trace().add({a.begin, ctx_->self(), TraceKind::tx_begin, tx});
}

void ClientBase::route_shot(Attempt& a, std::vector<Op> ops) {
  a.shot_base = a.results.size();
  a.results.resize(a.shot_base + ops.size());
  a.shot_slots.clear();
  a.acked.clear();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    NodeId s = route_(ops[i].key);
    a.shot_slots[s].push_back(static_cast<std::uint16_t>(i));
    ++a.requests[s];
    a.results[a.shot_base + i].key = ops[i].key;
    a.results[a.shot_base + i].kind = ops[i].kind;
    a.all_ops.push_back(ops[i]);
  }
  a.shot_ops = std::move(ops);
  a.pending = static_cast<std::uint32_t>(a.shot_slots.size());
}

void ClientBase::store_results(Attempt& a, NodeId from, const std::vector<OpResult>& res) {
  auto it = a.shot_slots.find(from);
  if (it == a.shot_slots.end()) return;
  const auto& slots = it->second;
  for (std::size_t i = 0; i < slots.size() && i < res.size(); ++i) {
    a.results[a.shot_base + slots[i]] = res[i];
    if (res[i].delayed) a.delayed = true;
  }
}

void ClientBase::send_to_participants(Attempt& a, MsgKind kind, Decision d, std::uint16_t round) {
  for (const auto& [server, n] : a.requests) {
    if (std::find(a.failed.begin(), a.failed.end(), server) != a.failed.end()) continue;
    Message m;
    m.kind = kind;
    m.to = server;
    m.tx = a.tx;
    m.ts = a.tx;
    m.decision = d;
    m.round = round;
    ctx_->send(std::move(m));
  }
}

void ClientBase::finish_commit(Attempt& a, Outcome o, const Timestamp& commit_ts) {
  auto& trace = ctx_->trace();
  const auto now = ctx_->global_now();
  std::uint32_t delayed_ops = 0;
  for (const auto& r : a.results) {
    if (r.delayed) ++delayed_ops;
    if (r.kind == OpKind::read) {
      trace.add({now, ctx_->self(), TraceKind::read, a.tx, r.key, r.version, {}, r.value.digest});
    }
  }
  trace.add({now, ctx_->self(), TraceKind::commit, a.tx, 0, {}, commit_ts, 0, a.rounds});
  if (metrics_ != nullptr) {
    metrics_->add({o, a.read_only, a.rounds, a.begin, now, static_cast<std::uint32_t>(a.results.size()), delayed_ops});
  }
  a.live = false;
  by_tx_.erase(a.tx);
  if (a.cb) {
    TxOutcome out;
    out.committed = true;
    out.tx = a.tx;
    out.commit_ts = commit_ts;
    out.attempts = a.attempts;
    out.rounds = a.rounds;
    out.results = a.results;
    a.cb(out);
  }
  done(a.lid);
}

void ClientBase::finish_abort(Attempt& a, Outcome o) {
  const auto now = ctx_->global_now();
  ctx_->trace().add({now, ctx_->self(), TraceKind::abort, a.tx, 0, {}, {}, 0, static_cast<std::uint64_t>(o)});
  std::uint32_t delayed_ops = 0;
  for (const auto& r : a.results) delayed_ops += r.delayed ? 1 : 0;
  if (metrics_ != nullptr) {
    metrics_->add({o, a.read_only, a.rounds, a.begin, now, static_cast<std::uint32_t>(a.results.size()), delayed_ops});
  }
  a.live = false;
  by_tx_.erase(a.tx);
  if (o == Outcome::aborted_ro && ++a.ro_aborts >= cfg_.ro_fallback) a.force_rw = true;
  if (a.attempts >= cfg_.max_attempts) {
    if (metrics_ != nullptr) metrics_->note_given_up();
    if (a.cb) {
      TxOutcome out;
      out.tx = a.tx;
      out.attempts = a.attempts;
      out.rounds = a.rounds;
      a.cb(out);
    }
    done(a.lid);
    return;
  }
  auto factor = std::min<std::int64_t>(std::int64_t{1} << std::min<std::uint32_t>(a.attempts - 1, 4), 16);
  auto delay = static_cast<std::int64_t>(static_cast<double>(cfg_.rtt * factor) * rng_.uniform(0.5, 1.5));
  ctx_->set_timer(std::max<std::int64_t>(1, delay), (a.lid << 4) | kRetryTimer);
}

void ClientBase::done(std::uint64_t lid) {
  attempts_.erase(lid);
  ++finished_;
  while (!backlog_.empty() && attempts_.size() < cfg_.max_outstanding) {
    auto [prog, cb] = std::move(backlog_.front());
    backlog_.pop_front();
    submit(std::move(prog), std::move(cb));
  }
}

}  // namespace ncc
