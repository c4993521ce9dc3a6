#include "ncc/d2pl.hpp"

#include <algorithm>

namespace ncc {

void D2plServer::on_message(const Message& m) {
  switch (m.kind) {
    case MsgKind::ExecuteReq:
      handle_execute(m);
      break;
    case MsgKind::PrepareReq:
      handle_prepare(m);
      break;
    case MsgKind::CommitAbort:
      handle_decision(m);
      break;
    default:
      break;
  }
}

void D2plServer::handle_execute(const Message& m) {
  auto [it, fresh] = txs_.try_emplace(m.tx);
  Tx& t = it->second;
  if (fresh) {
    t.client = m.from;
    t.ts = m.ts;
  }
  Pending p;
  p.shot = m.shot;
  p.round = m.round;
  p.ops = m.ops;
  p.granted.assign(m.ops.size(), false);
  if (t.aborted) {
    respond(m.tx, t, p, false);
    return;
  }
  std::vector<TxId> victims;
  for (std::size_t i = 0; i < m.ops.size(); ++i) {
    const auto& op = m.ops[i];
    auto mode = op.kind == OpKind::read ? LockMode::shared : LockMode::exclusive;
    if (locks_.try_acquire(op.key, m.tx, mode, m.ts)) {
      p.granted[i] = true;
      continue;
    }
    ++stats_.conflicts;
    if (!wound_wait_) {
      abort_local(m.tx);
      respond(m.tx, t, p, false);
      return;
    }
    for (const auto& h : locks_.conflicts(op.key, m.tx, mode)) {
      auto hit = txs_.find(h);
      if (hit == txs_.end() || hit->second.prepared || !(m.ts < hit->second.ts)) continue;
      if (std::find(victims.begin(), victims.end(), h) == victims.end()) victims.push_back(h);
    }
    locks_.enqueue(op.key, m.tx, mode, m.ts);
    ++p.waiting;
  }
  stats_.executed += m.ops.size();
  t.pending.push_back(std::move(p));
  // Wounds run after the batch is registered so grants they free reach it.
  for (const auto& h : victims) {
    auto hit = txs_.find(h);
    if (hit == txs_.end() || hit->second.aborted) continue;
    ++stats_.wounds;
    Message w;
    w.kind = MsgKind::Wound;
    w.to = hit->second.client;
    w.tx = h;
    ctx_->send(std::move(w));
    abort_local(h);
  }
  maybe_respond(m.tx, t);
}

void D2plServer::respond(const TxId& tx, Tx& t, Pending& p, bool ok) {
  Message r;
  r.kind = MsgKind::ExecuteResp;
  r.to = t.client;
  r.tx = tx;
  r.shot = p.shot;
  r.round = p.round;
  r.ok = ok;
  if (ok) {
    for (const auto& op : p.ops) {
      OpResult res;
      res.key = op.key;
      res.kind = op.kind;
      if (op.kind == OpKind::read) {
        const auto& v = store_.get(op.key);
        res.value = v.value;
        res.version = v.version;
      } else {
        t.writes.push_back(op);
      }
      r.results.push_back(res);
    }
  }
  ctx_->send(std::move(r));
}

void D2plServer::maybe_respond(const TxId& tx, Tx& t) {
  for (auto it = t.pending.begin(); it != t.pending.end();) {
    if (it->waiting == 0) {
      respond(tx, t, *it, true);
      it = t.pending.erase(it);
    } else {
      ++it;
    }
  }
}

void D2plServer::apply_grants(const std::vector<LockGrant>& grants) {
  for (const auto& g : grants) {
    auto it = txs_.find(g.tx);
    if (it == txs_.end() || it->second.aborted) continue;
    Tx& t = it->second;
    bool matched = false;
    for (auto& p : t.pending) {
      for (std::size_t i = 0; i < p.ops.size() && !matched; ++i) {
        auto mode = p.ops[i].kind == OpKind::read ? LockMode::shared : LockMode::exclusive;
        if (!p.granted[i] && p.ops[i].key == g.key && mode == g.mode) {
          p.granted[i] = true;
          --p.waiting;
          matched = true;
        }
      }
      if (matched) break;
    }
    maybe_respond(g.tx, t);
  }
}

void D2plServer::abort_local(const TxId& tx) {
  auto& t = txs_[tx];
  if (t.aborted) return;
  t.aborted = true;
  t.pending.clear();
  t.writes.clear();
  apply_grants(locks_.release_all(tx));
}

void D2plServer::handle_prepare(const Message& m) {
  auto it = txs_.find(m.tx);
  Message r;
  r.kind = MsgKind::PrepareResp;
  r.to = m.from;
  r.tx = m.tx;
  r.round = m.round;
  r.ok = it != txs_.end() && !it->second.aborted && it->second.pending.empty();
  if (r.ok) it->second.prepared = true;
  ctx_->send(std::move(r));
}

void D2plServer::handle_decision(const Message& m) {
  if (m.decision == Decision::aborted) {
    abort_local(m.tx);
    return;
  }
  auto it = txs_.find(m.tx);
  if (it == txs_.end() || it->second.aborted) return;
  Tx& t = it->second;
  const auto now = ctx_->global_now();
  for (const auto& op : t.writes) {
    auto seq = store_.install(op.key, op.value, m.tx);
    ++stats_.installs;
    ctx_->trace().add({now, ctx_->self(), TraceKind::write, m.tx, op.key, m.tx,
                       Timestamp{static_cast<std::int64_t>(seq), 0}, op.value.digest});
  }
  t.writes.clear();
  t.aborted = true;  // finished; rejects late duplicates
  apply_grants(locks_.release_all(m.tx));
}

}  // namespace ncc
