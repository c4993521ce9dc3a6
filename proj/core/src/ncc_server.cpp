#include "ncc/ncc_server.hpp"

#include <algorithm>

#include "ncc/rng.hpp"

namespace ncc {

namespace {

constexpr std::uint64_t kGcTimer = 1;
constexpr std::uint64_t kScanTimer = 2;

}  // namespace

struct NccServer::Recovery {
  std::vector<CohortEntry> cohorts;
  std::map<NodeId, Message> replies;
  bool sr_phase = false;
  std::size_t sr_replies = 0;
  bool sr_failed = false;
};

NccServer::NccServer(NccServerConfig cfg) : cfg_(cfg) {}

NccServer::~NccServer() = default;

void NccServer::on_start() { ctx_->set_timer(cfg_.gc_interval, kGcTimer, true); }

void NccServer::on_timer(std::uint64_t tag) {
  ++event_no_;
  if (tag == kGcTimer) {
    garbage_collect();
    expire_records();
    ctx_->set_timer(cfg_.gc_interval, kGcTimer, true);
  } else if (tag == kScanTimer) {
    scan();
  }
}

void NccServer::on_message(const Message& m) {
  ++event_no_;
  switch (m.kind) {
    case MsgKind::ExecuteReq:
      if (m.read_only) {
        handle_read_only(m);
      } else {
        handle_execute(m);
      }
      break;
    case MsgKind::CommitAbort:
      decide(m.tx, m.decision, false);
      break;
    case MsgKind::SmartRetryReq:
      handle_smart_retry(m);
      break;
    case MsgKind::SmartRetryResp:
      handle_smart_retry_resp(m);
      break;
    case MsgKind::RecoverQuery:
      handle_recover_query(m);
      break;
    case MsgKind::RecoverReply:
      handle_recover_reply(m);
      break;
    case MsgKind::RecoverTrigger:
      handle_recover_trigger(m);
      break;
    case MsgKind::CohortNotice:
      handle_cohort_notice(m);
      break;
    default:
      break;
  }
}

NccServer::KeyState& NccServer::key_state(Key key) {
  auto [it, fresh] = keys_.try_emplace(key);
  if (fresh) {
    Version v;
    v.value = {splitmix64(key), 0};
    v.t_w = v.t_r = v.tr_second = kInitTx;
    v.creator = kInitTx;
    v.committed = true;
    it->second.versions.push_back(v);
  }
  return it->second;
}

void NccServer::seed_version(Key key, Value value, TimestampPair pair, TxId creator) {
  auto& ks = key_state(key);
  if (creator == kInitTx) ks.versions.clear();
  Version v;
  v.value = value;
  v.t_w = pair.t_w;
  v.t_r = pair.t_r;
  v.tr_second = pair.t_r;
  v.creator = creator;
  v.committed = true;
  v.commit_seq = creator == kInitTx ? 0 : ++commit_seq_;
  if (creator != kInitTx) max_committed_tw_ = std::max(max_committed_tw_, pair.t_w);
  ks.versions.push_back(v);
}

const std::vector<Version>& NccServer::versions(Key key) { return key_state(key).versions; }

const std::vector<QueueItem>& NccServer::queue(Key key) { return key_state(key).queue; }

Decision NccServer::decision_of(const TxId& tx) const {
  auto it = txs_.find(tx);
  return it == txs_.end() ? Decision::undecided : it->second.decision;
}

int NccServer::find_version(const KeyState& ks, const TxId& creator) {
  for (int i = static_cast<int>(ks.versions.size()) - 1; i >= 0; --i) {
    if (ks.versions[i].creator == creator) return i;
  }
  return -1;
}

void NccServer::raise_read(Version& v, const Timestamp& t, const TxId& reader) {
  if (t > v.t_r) {
    if (v.tr_owner != reader) v.tr_second = v.t_r;
    v.t_r = t;
    v.tr_owner = reader;
  } else if (reader != v.tr_owner && t > v.tr_second) {
    v.tr_second = t;
  }
}

NccServer::Batch* NccServer::batch_of(ServerTx& st, std::uint16_t shot) {
  for (auto& b : st.batches) {
    if (b.shot == shot) return &b;
  }
  return nullptr;
}

bool NccServer::would_block(Key key, const TxId& tx, OpKind kind) {
  const auto& q = key_state(key).queue;
  for (const auto& it : q) {
    if (it.status != Decision::undecided || it.tx == tx) continue;
    if (it.kind == OpKind::write || kind == OpKind::write) return true;
  }
  return false;
}

void NccServer::handle_execute(const Message& m) {
  auto [it, fresh] = txs_.try_emplace(m.tx);
  ServerTx& st = it->second;
  if (fresh) {
    st.client = m.from;
    st.backup = m.backup;
    st.ts = m.ts;
    ++undecided_;
    arm_scan();
  }
  if (st.decision == Decision::aborted || st.tombstone) {
    Message r;
    r.kind = MsgKind::EarlyAbortResp;
    r.to = m.from;
    r.tx = m.tx;
    r.shot = m.shot;
    r.round = m.round;
    ctx_->send(std::move(r));
    return;
  }
  if (st.decision == Decision::committed || batch_of(st, m.shot) != nullptr) return;

  if (cfg_.rtc && cfg_.early_abort && m.ts < watermark_) {
    for (const auto& op : m.ops) {
      if (would_block(op.key, m.tx, op.kind)) {
        early_abort(m.tx, st, m.from, m.shot, m.round);
        return;
      }
    }
  }
  watermark_ = std::max(watermark_, m.ts);

  Batch b;
  b.shot = m.shot;
  b.round = m.round;
  b.t_c = m.t_c;
  b.t_s = ctx_->now();
  b.client = m.from;
  b.pending = static_cast<std::uint32_t>(m.ops.size());
  b.results.resize(m.ops.size());
  st.batches.push_back(std::move(b));
  st.last_activity = ctx_->now();
  if (m.last_shot && !m.cohorts.empty()) {
    st.registered = true;
    st.cohorts = m.cohorts;
  }
  for (std::size_t i = 0; i < m.ops.size(); ++i) {
    execute_op(m.tx, st, m.ops[i], m.ts, m.shot, static_cast<std::uint16_t>(i));
  }
  if (cfg_.rtc) {
    std::vector<Key> touched;
    touched.reserve(m.ops.size());
    for (const auto& op : m.ops) touched.push_back(op.key);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (auto k : touched) pump(k);
  }
}

void NccServer::execute_op(const TxId& tx, ServerTx& st, const Op& op, const Timestamp& ts,
                           std::uint16_t shot, std::uint16_t slot) {
  auto& ks = key_state(op.key);
  OpResult r;
  r.key = op.key;
  r.kind = op.kind;
  if (op.kind == OpKind::write) {
    const Version& cur = ks.versions.back();
    Timestamp base = cur.tr_owner == tx ? cur.tr_second : cur.t_r;
    Timestamp tw = std::max(ts, base.next());
    Version v;
    v.value = op.value;
    v.t_w = v.t_r = v.tr_second = tw;
    v.creator = tx;
    v.touched_at = ctx_->now();
    ks.versions.push_back(v);
    r.version = tx;
    r.pair = {tw, tw};
  } else {
    Version& cur = ks.versions.back();
    raise_read(cur, ts, tx);
    ++cur.pins;
    if (cur.creator != tx) cur.read_by_other = true;
    r.value = cur.value;
    r.version = cur.creator;
    r.pair = {cur.t_w, cur.t_r};
  }
  ++stats_.executed;
  st.ops.push_back({op.key, op.kind, shot, slot, r.version});
  batch_of(st, shot)->results[slot] = r;
  ++st.unreleased;
  auto& trace = ctx_->trace();
  if (trace.full()) {
    trace.add({ctx_->global_now(), ctx_->self(), TraceKind::execute, tx, op.key, r.version, r.pair.t_w,
               r.value.digest, static_cast<std::uint64_t>(op.kind)});
  }
  if (cfg_.rtc) {
    QueueItem qi;
    qi.tx = tx;
    qi.kind = op.kind;
    qi.ts = ts;
    qi.shot = shot;
    qi.slot = slot;
    qi.observed = r.version;
    qi.exec_event = event_no_;
    ks.queue.push_back(qi);
  } else {
    release(tx, st, shot, slot, false);
  }
}

void NccServer::release(const TxId& tx, ServerTx& st, std::uint16_t shot, std::uint16_t slot, bool delayed) {
  Batch* b = batch_of(st, shot);
  if (b == nullptr || b->sent) return;
  b->results[slot].delayed = delayed;
  ++stats_.responses;
  if (delayed) ++stats_.delayed_responses;
  --b->pending;
  if (st.unreleased > 0) --st.unreleased;
  st.last_activity = ctx_->now();
  auto& trace = ctx_->trace();
  if (trace.full()) {
    trace.add({ctx_->global_now(), ctx_->self(), TraceKind::release, tx, b->results[slot].key,
               b->results[slot].version, {}, 0, delayed ? 1u : 0u});
  }
  if (b->pending == 0) {
    Message r;
    r.kind = MsgKind::ExecuteResp;
    r.to = b->client;
    r.tx = tx;
    r.shot = b->shot;
    r.round = b->round;
    r.t_c = b->t_c;
    r.t_s = b->t_s;
    r.token = token();
    r.results = b->results;
    b->sent = true;
    ctx_->send(std::move(r));
  }
  if (st.unreleased == 0) answer_queries(tx, st);
}

void NccServer::pump(Key key) {
  auto& q = key_state(key).queue;
  std::size_t done = 0;
  while (done < q.size() && q[done].status != Decision::undecided) ++done;
  q.erase(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(done));
  TxId w1, a1;
  int wn = 0;
  int an = 0;
  for (std::size_t i = 0; i < q.size() && wn < 2; ++i) {
    if (q[i].status != Decision::undecided) continue;
    QueueItem& it = q[i];
    if (!it.released) {
      bool blocked = it.kind == OpKind::read ? (wn >= 2 || (wn == 1 && w1 != it.tx))
                                             : (an >= 2 || (an == 1 && a1 != it.tx));
      if (!blocked) {
        it.released = true;
        auto tit = txs_.find(it.tx);
        if (tit != txs_.end()) release(it.tx, tit->second, it.shot, it.slot, it.exec_event != event_no_);
      }
    }
    if (an == 0) {
      a1 = it.tx;
      an = 1;
    } else if (an == 1 && a1 != it.tx) {
      an = 2;
    }
    if (it.kind == OpKind::write) {
      if (wn == 0) {
        w1 = it.tx;
        wn = 1;
      } else if (wn == 1 && w1 != it.tx) {
        wn = 2;
      }
    }
  }
}

void NccServer::early_abort(const TxId& tx, ServerTx& st, NodeId client, std::uint16_t shot,
                            std::uint16_t round) {
  ++stats_.early_aborts;
  auto& trace = ctx_->trace();
  if (trace.full()) trace.add({ctx_->global_now(), ctx_->self(), TraceKind::early_abort, tx});
  Message r;
  r.kind = MsgKind::EarlyAbortResp;
  r.to = client;
  r.tx = tx;
  r.shot = shot;
  r.round = round;
  ctx_->send(std::move(r));
  st.tombstone = true;
  decide(tx, Decision::aborted, true);
}

void NccServer::apply_decision(const TxId& tx, Decision d) { decide(tx, d, false); }

void NccServer::decide(const TxId& tx, Decision d, bool tombstone) {
  if (d == Decision::undecided) return;
  auto it = txs_.find(tx);
  if (it == txs_.end()) {
    if (d == Decision::aborted) {
      auto& st = txs_[tx];
      st.decision = Decision::aborted;
      st.tombstone = true;
      st.decided_at = ctx_->now();
      expiry_.emplace_back(st.decided_at, tx);
    } else {
      ++stats_.unknown_commits;
    }
    return;
  }
  ServerTx& st = it->second;
  if (tombstone) st.tombstone = true;
  if (st.decision != Decision::undecided) {
    if (st.decision != d) ++stats_.conflicting_decisions;
    return;
  }
  st.decision = d;
  st.decided_at = ctx_->now();
  if (undecided_ > 0) --undecided_;
  expiry_.emplace_back(st.decided_at, tx);
  auto& trace = ctx_->trace();
  if (trace.full()) {
    trace.add({ctx_->global_now(), ctx_->self(), TraceKind::decide, tx, 0, {}, {}, 0,
               static_cast<std::uint64_t>(d)});
  }

  struct Reexec {
    Key key;
    TxId tx;
    Timestamp ts;
    std::uint16_t shot;
    std::uint16_t slot;
  };
  std::vector<Reexec> reexec;
  std::vector<Key> dirty;
  dirty.reserve(st.ops.size());
  const auto now = ctx_->now();
  for (const auto& op : st.ops) {
    auto& ks = keys_.find(op.key)->second;
    for (auto& qi : ks.queue) {
      if (qi.tx == tx) qi.status = d;
    }
    if (op.kind == OpKind::write) {
      int idx = find_version(ks, tx);
      if (idx < 0) continue;
      if (d == Decision::committed) {
        Version& v = ks.versions[idx];
        v.committed = true;
        v.commit_seq = ++commit_seq_;
        v.touched_at = now;
        max_committed_tw_ = std::max(max_committed_tw_, v.t_w);
        trace.add({ctx_->global_now(), ctx_->self(), TraceKind::write, tx, op.key, tx, v.t_w, v.value.digest});
        if (!ks.gc_candidate && ks.versions.size() > 1) {
          ks.gc_candidate = true;
          gc_candidates_.push_back(op.key);
        }
      } else {
        ks.versions.erase(ks.versions.begin() + idx);
        for (auto q = ks.queue.begin(); q != ks.queue.end();) {
          if (q->status == Decision::undecided && q->kind == OpKind::read && q->observed == tx && q->tx != tx) {
            reexec.push_back({op.key, q->tx, q->ts, q->shot, q->slot});
            q = ks.queue.erase(q);
          } else {
            ++q;
          }
        }
      }
    } else {
      int idx = find_version(ks, op.observed);
      if (idx >= 0) {
        Version& v = ks.versions[idx];
        if (v.pins > 0) --v.pins;
        v.touched_at = now;
      }
    }
    dirty.push_back(op.key);
  }
  if (d == Decision::aborted) st.unreleased = 0;
  answer_queries(tx, st);
  for (auto w : st.decision_waiters) {
    Message r;
    r.kind = MsgKind::CommitAbort;
    r.to = w;
    r.tx = tx;
    r.decision = d;
    ctx_->send(std::move(r));
  }
  st.decision_waiters.clear();
  for (const auto& r : reexec) reexecute_read(r.key, r.tx, r.ts, r.shot, r.slot);
  std::sort(dirty.begin(), dirty.end());
  dirty.erase(std::unique(dirty.begin(), dirty.end()), dirty.end());
  for (auto k : dirty) pump(k);
}

void NccServer::reexecute_read(Key key, const TxId& tx, const Timestamp& ts, std::uint16_t shot,
                               std::uint16_t slot) {
  auto it = txs_.find(tx);
  if (it == txs_.end() || it->second.decision != Decision::undecided) return;
  ServerTx& st = it->second;
  Batch* b = batch_of(st, shot);
  if (b == nullptr) return;
  ++stats_.reexecuted_reads;
  if (cfg_.early_abort && ts < watermark_ && would_block(key, tx, OpKind::read)) {
    early_abort(tx, st, b->client, shot, b->round);
    return;
  }
  auto& ks = key_state(key);
  // The read came before this tx's own write on the key, if any.
  int own = find_version(ks, tx);
  Version& cur = own > 0 ? ks.versions[static_cast<std::size_t>(own - 1)] : ks.versions.back();
  raise_read(cur, ts, tx);
  ++cur.pins;
  cur.read_by_other = true;
  OpResult r;
  r.key = key;
  r.kind = OpKind::read;
  r.value = cur.value;
  r.version = cur.creator;
  r.pair = {cur.t_w, cur.t_r};
  b->results[slot] = r;
  for (auto& op : st.ops) {
    if (op.shot == shot && op.slot == slot) op.observed = cur.creator;
  }
  QueueItem qi;
  qi.tx = tx;
  qi.kind = OpKind::read;
  qi.ts = ts;
  qi.shot = shot;
  qi.slot = slot;
  qi.observed = cur.creator;
  qi.exec_event = 0;
  ks.queue.push_back(qi);
}

void NccServer::handle_read_only(const Message& m) {
  watermark_ = std::max(watermark_, m.ts);
  for (const auto& op : m.ops) {
    const Version& cur = key_state(op.key).versions.back();
    if (!cur.committed || cur.commit_seq > m.token.seq) {
      ++stats_.ro_aborts;
      auto& trace = ctx_->trace();
      if (trace.full()) trace.add({ctx_->global_now(), ctx_->self(), TraceKind::ro_abort, m.tx, op.key});
      Message r;
      r.kind = MsgKind::RoAbortResp;
      r.to = m.from;
      r.tx = m.tx;
      r.shot = m.shot;
      r.round = m.round;
      r.token = token();
      ctx_->send(std::move(r));
      return;
    }
  }
  Message r;
  r.kind = MsgKind::ExecuteResp;
  r.to = m.from;
  r.tx = m.tx;
  r.shot = m.shot;
  r.round = m.round;
  r.read_only = true;
  r.t_c = m.t_c;
  r.t_s = ctx_->now();
  r.results.reserve(m.ops.size());
  for (const auto& op : m.ops) {
    Version& cur = key_state(op.key).versions.back();
    raise_read(cur, m.ts, m.tx);
    OpResult res;
    res.key = op.key;
    res.kind = OpKind::read;
    res.value = cur.value;
    res.version = cur.creator;
    res.pair = {cur.t_w, cur.t_r};
    r.results.push_back(res);
  }
  stats_.executed += m.ops.size();
  stats_.responses += m.ops.size();
  r.token = token();
  ctx_->send(std::move(r));
}

SrState NccServer::try_smart_retry(const TxId& tx, const Timestamp& t_prime) {
  auto it = txs_.find(tx);
  if (it == txs_.end()) return SrState::failure;
  ServerTx& st = it->second;
  if (st.decision == Decision::aborted) return SrState::failure;
  if (st.decision == Decision::committed) return SrState::success;
  if (st.sr != SrState::none) return st.sr_t == t_prime ? st.sr : SrState::failure;

  bool ok = true;
  for (const auto& op : st.ops) {
    auto kit = keys_.find(op.key);
    if (kit == keys_.end()) {
      ok = false;
      break;
    }
    const auto& vs = kit->second.versions;
    int idx = find_version(kit->second, op.kind == OpKind::write ? tx : op.observed);
    if (idx < 0) {
      ok = false;
      break;
    }
    if (idx + 1 < static_cast<int>(vs.size())) {
      const Version& next = vs[idx + 1];
      if (next.creator != tx && next.t_w <= t_prime) {
        ok = false;
        break;
      }
    }
    if (op.kind == OpKind::write && (vs[idx].t_w != vs[idx].t_r || vs[idx].read_by_other)) {
      ok = false;
      break;
    }
  }
  if (ok) {
    for (const auto& op : st.ops) {
      auto& ks = keys_.find(op.key)->second;
      if (op.kind == OpKind::write) {
        Version& v = ks.versions[find_version(ks, tx)];
        v.t_w = v.t_r = v.tr_second = t_prime;
        v.tr_owner = kInitTx;
      } else {
        raise_read(ks.versions[find_version(ks, op.observed)], t_prime, tx);
      }
    }
  }
  st.sr = ok ? SrState::success : SrState::failure;
  st.sr_t = t_prime;
  auto& trace = ctx_->trace();
  if (trace.full()) {
    trace.add({ctx_->global_now(), ctx_->self(), TraceKind::smart_retry, tx, 0, {}, t_prime, 0, ok ? 1u : 0u});
  }
  return st.sr;
}

void NccServer::handle_smart_retry(const Message& m) {
  auto res = try_smart_retry(m.tx, m.ts);
  Message r;
  r.kind = MsgKind::SmartRetryResp;
  r.to = m.from;
  r.tx = m.tx;
  r.ts = m.ts;
  r.round = m.round;
  r.ok = res == SrState::success;
  ctx_->send(std::move(r));
}

std::size_t NccServer::garbage_collect() {
  std::size_t reclaimed = 0;
  const auto now = ctx_->now();
  std::vector<Key> keep;
  for (auto key : gc_candidates_) {
    auto kit = keys_.find(key);
    if (kit == keys_.end()) continue;
    auto& ks = kit->second;
    ks.gc_candidate = false;
    auto& vs = ks.versions;
    int last_committed = -1;
    for (int i = static_cast<int>(vs.size()) - 1; i >= 0; --i) {
      if (vs[i].committed) {
        last_committed = i;
        break;
      }
    }
    int remove = 0;
    while (remove < last_committed && vs[remove].committed && vs[remove].pins == 0 &&
           vs[remove].touched_at + cfg_.retention <= now) {
      ++remove;
    }
    if (remove > 0) {
      vs.erase(vs.begin(), vs.begin() + remove);
      reclaimed += static_cast<std::size_t>(remove);
    }
    if (last_committed - remove > 0) {
      ks.gc_candidate = true;
      keep.push_back(key);
    }
  }
  gc_candidates_ = std::move(keep);
  stats_.gc_reclaimed += reclaimed;
  if (reclaimed > 0 && ctx_->trace().full()) {
    ctx_->trace().add({ctx_->global_now(), ctx_->self(), TraceKind::gc, {}, 0, {}, {}, 0, reclaimed});
  }
  return reclaimed;
}

void NccServer::expire_records() {
  const auto now = ctx_->now();
  const auto ttl = std::max(cfg_.tx_ttl, cfg_.retention);
  while (!expiry_.empty() && expiry_.front().first + ttl <= now) {
    auto [at, tx] = expiry_.front();
    expiry_.pop_front();
    auto it = txs_.find(tx);
    if (it == txs_.end()) continue;
    if (it->second.decision != Decision::undecided && it->second.decided_at == at && !it->second.recovery) {
      txs_.erase(it);
    }
  }
}

bool NccServer::check_invariants() const {
  for (const auto& [key, ks] : keys_) {
    for (std::size_t i = 0; i < ks.versions.size(); ++i) {
      const auto& v = ks.versions[i];
      if (v.t_r < v.t_w) return false;
      if (i > 0 && !(ks.versions[i - 1].t_w < v.t_w)) return false;
    }
  }
  return true;
}

// Client-failure recovery.

Message NccServer::make_recover_reply(const TxId& tx, const ServerTx& st) const {
  Message r;
  r.kind = MsgKind::RecoverReply;
  r.tx = tx;
  r.decision = st.decision;
  r.sr = st.sr;
  r.ts = st.sr_t;
  std::vector<const Batch*> bs;
  for (const auto& b : st.batches) bs.push_back(&b);
  std::sort(bs.begin(), bs.end(), [](const Batch* a, const Batch* b) { return a->shot < b->shot; });
  for (const auto* b : bs) {
    for (const auto& res : b->results) r.results.push_back(res);
  }
  r.executed = static_cast<std::uint32_t>(st.ops.size());
  return r;
}

Message NccServer::recover_query(const TxId& tx) {
  auto it = txs_.find(tx);
  if (it == txs_.end()) {
    Message r;
    r.kind = MsgKind::RecoverReply;
    r.tx = tx;
    r.executed = 0;
    return r;
  }
  return make_recover_reply(tx, it->second);
}

void NccServer::answer_queries(const TxId& tx, ServerTx& st) {
  if (st.query_waiters.empty()) return;
  auto waiters = std::move(st.query_waiters);
  st.query_waiters.clear();
  for (auto w : waiters) {
    Message r = make_recover_reply(tx, st);
    r.to = w;
    ctx_->send(std::move(r));
  }
}

void NccServer::handle_recover_query(const Message& m) {
  auto it = txs_.find(m.tx);
  if (it == txs_.end()) {
    auto& st = txs_[m.tx];
    st.client = m.client;
    st.backup = m.from;
    st.tombstone = true;
    ++undecided_;
    Message r;
    r.kind = MsgKind::RecoverReply;
    r.to = m.from;
    r.tx = m.tx;
    r.executed = 0;
    ctx_->send(std::move(r));
    return;
  }
  ServerTx& st = it->second;
  st.tombstone = true;
  if (st.decision != Decision::undecided || st.unreleased == 0) {
    Message r = make_recover_reply(m.tx, st);
    r.to = m.from;
    ctx_->send(std::move(r));
  } else {
    st.query_waiters.push_back(m.from);
  }
}

void NccServer::handle_recover_trigger(const Message& m) {
  auto it = txs_.find(m.tx);
  if (it == txs_.end()) {
    auto& st = txs_[m.tx];
    st.client = m.client;
    st.decision = Decision::aborted;
    st.tombstone = true;
    st.decided_at = ctx_->now();
    expiry_.emplace_back(st.decided_at, m.tx);
    Message r;
    r.kind = MsgKind::CommitAbort;
    r.to = m.from;
    r.tx = m.tx;
    r.decision = Decision::aborted;
    ctx_->send(r);
    r.kind = MsgKind::DecisionNotice;
    r.to = m.client;
    ctx_->send(std::move(r));
    return;
  }
  ServerTx& st = it->second;
  if (st.decision != Decision::undecided) {
    Message r;
    r.kind = MsgKind::CommitAbort;
    r.to = m.from;
    r.tx = m.tx;
    r.decision = st.decision;
    ctx_->send(std::move(r));
    return;
  }
  if (st.client == kNoNode) st.client = m.client;
  st.decision_waiters.push_back(m.from);
  start_recovery(m.tx, st);
}

void NccServer::handle_cohort_notice(const Message& m) {
  auto it = txs_.find(m.tx);
  bool ok = it != txs_.end() && !it->second.tombstone && it->second.decision == Decision::undecided;
  if (ok) {
    it->second.registered = true;
    it->second.cohorts = m.cohorts;
  }
  Message r;
  r.kind = MsgKind::CohortAck;
  r.to = m.from;
  r.tx = m.tx;
  r.round = m.round;
  r.ok = ok;
  ctx_->send(std::move(r));
}

void NccServer::start_recovery(const TxId& tx, ServerTx& st) {
  if (st.recovery || st.decision != Decision::undecided) return;
  ++stats_.recoveries;
  auto& trace = ctx_->trace();
  if (trace.full()) trace.add({ctx_->global_now(), ctx_->self(), TraceKind::recover, tx});
  if (!st.registered) {
    if (st.client != kNoNode) {
      Message r;
      r.kind = MsgKind::DecisionNotice;
      r.to = st.client;
      r.tx = tx;
      r.decision = Decision::aborted;
      ctx_->send(std::move(r));
    }
    trace.add({ctx_->global_now(), ctx_->self(), TraceKind::abort, tx, 0, {}, {}, 0, kBackupCommitFlag});
    decide(tx, Decision::aborted, true);
    return;
  }
  st.recovery = std::make_unique<Recovery>();
  st.recovery->cohorts = st.cohorts;
  for (const auto& c : st.cohorts) {
    Message q;
    q.kind = MsgKind::RecoverQuery;
    q.to = c.server;
    q.tx = tx;
    q.client = st.client;
    q.backup = ctx_->self();
    ctx_->send(std::move(q));
  }
}

void NccServer::handle_recover_reply(const Message& m) {
  auto it = txs_.find(m.tx);
  if (it == txs_.end() || !it->second.recovery) return;
  it->second.recovery->replies[m.from] = m;
  maybe_finish_recovery(m.tx, it->second);
}

void NccServer::maybe_finish_recovery(const TxId& tx, ServerTx& st) {
  auto& rec = *st.recovery;
  if (rec.sr_phase || rec.replies.size() < rec.cohorts.size()) return;
  if (st.decision != Decision::undecided) {
    finish_recovery(tx, st, st.decision);
    return;
  }
  for (const auto& [node, r] : rec.replies) {
    if (r.decision != Decision::undecided) {
      finish_recovery(tx, st, r.decision);
      return;
    }
  }
  for (const auto& c : rec.cohorts) {
    auto rit = rec.replies.find(c.server);
    if (rit == rec.replies.end() || rit->second.executed < c.requests) {
      finish_recovery(tx, st, Decision::aborted);
      return;
    }
  }
  bool any = false;
  Timestamp tw_max, tr_min;
  for (const auto& [node, r] : rec.replies) {
    for (const auto& res : r.results) {
      if (!any) {
        tw_max = res.pair.t_w;
        tr_min = res.pair.t_r;
        any = true;
      } else {
        tw_max = std::max(tw_max, res.pair.t_w);
        tr_min = std::min(tr_min, res.pair.t_r);
      }
    }
  }
  if (!any) {
    finish_recovery(tx, st, Decision::aborted);
    return;
  }
  if (tw_max <= tr_min) {
    finish_recovery(tx, st, Decision::committed);
    return;
  }
  for (const auto& [node, r] : rec.replies) {
    if (r.sr == SrState::failure) {
      finish_recovery(tx, st, Decision::aborted);
      return;
    }
  }
  rec.sr_phase = true;
  for (const auto& c : rec.cohorts) {
    Message q;
    q.kind = MsgKind::SmartRetryReq;
    q.to = c.server;
    q.tx = tx;
    q.ts = tw_max;
    ctx_->send(std::move(q));
  }
}

void NccServer::handle_smart_retry_resp(const Message& m) {
  auto it = txs_.find(m.tx);
  if (it == txs_.end() || !it->second.recovery || !it->second.recovery->sr_phase) return;
  auto& rec = *it->second.recovery;
  ++rec.sr_replies;
  if (!m.ok) rec.sr_failed = true;
  if (rec.sr_replies >= rec.cohorts.size()) {
    finish_recovery(m.tx, it->second, rec.sr_failed ? Decision::aborted : Decision::committed);
  }
}

void NccServer::finish_recovery(const TxId& tx, ServerTx& st, Decision d) {
  auto rec = std::move(st.recovery);
  Decision final = st.decision != Decision::undecided ? st.decision : d;
  for (const auto& c : rec->cohorts) {
    if (c.server == ctx_->self()) continue;
    Message r;
    r.kind = MsgKind::CommitAbort;
    r.to = c.server;
    r.tx = tx;
    r.decision = final;
    ctx_->send(std::move(r));
  }
  if (st.client != kNoNode) {
    Message r;
    r.kind = MsgKind::DecisionNotice;
    r.to = st.client;
    r.tx = tx;
    r.decision = final;
    ctx_->send(std::move(r));
  }
  auto& trace = ctx_->trace();
  const auto now = ctx_->global_now();
  if (final == Decision::committed) {
    for (const auto& [node, r] : rec->replies) {
      for (const auto& res : r.results) {
        if (res.kind == OpKind::read) {
          trace.add({now, ctx_->self(), TraceKind::read, tx, res.key, res.version, {}, res.value.digest});
        }
      }
    }
    trace.add({now, ctx_->self(), TraceKind::commit, tx, 0, {}, {}, 0, kBackupCommitFlag});
  } else {
    trace.add({now, ctx_->self(), TraceKind::abort, tx, 0, {}, {}, 0, kBackupCommitFlag});
  }
  decide(tx, final, false);
}

void NccServer::arm_scan() {
  if (scan_armed_ || cfg_.recovery_timeout <= 0 || undecided_ == 0) return;
  scan_armed_ = true;
  ctx_->set_timer(std::max<std::int64_t>(1, cfg_.recovery_timeout / 4), kScanTimer, false);
}

void NccServer::scan() {
  scan_armed_ = false;
  const auto now = ctx_->now();
  const auto timeout = cfg_.recovery_timeout;
  std::vector<TxId> stale;
  for (const auto& [tx, st] : txs_) {
    if (st.decision != Decision::undecided || st.unreleased > 0 || st.backup == kNoNode) continue;
    if (st.recovery) continue;
    if (now - st.last_activity >= timeout) stale.push_back(tx);
  }
  std::sort(stale.begin(), stale.end());
  for (const auto& tx : stale) {
    auto it = txs_.find(tx);
    if (it == txs_.end()) continue;
    ServerTx& st = it->second;
    if (st.decision != Decision::undecided) continue;
    if (st.backup == ctx_->self()) {
      start_recovery(tx, st);
    } else if (st.trigger_at == INT64_MIN || now - st.trigger_at >= timeout) {
      st.trigger_at = now;
      Message r;
      r.kind = MsgKind::RecoverTrigger;
      r.to = st.backup;
      r.tx = tx;
      r.client = st.client;
      ctx_->send(std::move(r));
    }
  }
  arm_scan();
}

}  // namespace ncc
