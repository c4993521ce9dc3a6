#include "ncc/mvto.hpp"

#include <algorithm>

#include "ncc/rng.hpp"

namespace ncc {

std::vector<MvtoVersion>& MvtoServer::chain(Key key) {
  auto [it, fresh] = data_.try_emplace(key);
  if (fresh) {
    MvtoVersion v;
    v.value = {splitmix64(key), 0};
    v.t_w = v.t_r = kInitTx;
    v.creator = kInitTx;
    v.committed = true;
    it->second.push_back(v);
  }
  return it->second;
}

const std::vector<MvtoVersion>& MvtoServer::versions(Key key) { return chain(key); }

namespace {

// Index of the latest version with t_w < ts.
std::size_t below(const std::vector<MvtoVersion>& c, const Timestamp& ts) {
  auto it = std::lower_bound(c.begin(), c.end(), ts, [](const MvtoVersion& v, const Timestamp& t) { return v.t_w < t; });
  return it == c.begin() ? 0 : static_cast<std::size_t>(it - c.begin()) - 1;
}

}  // namespace

bool MvtoServer::read(Key key, const TxId& tx, const Timestamp& ts, OpResult& out, std::uint16_t shot,
                      std::uint16_t slot) {
  auto& c = chain(key);
  auto& v = c[below(c, ts)];
  v.t_r = std::max(v.t_r, ts);
  if (!v.committed && v.creator != tx) {
    parked_[key].push_back({tx, ts, shot, slot});
    return false;
  }
  out.key = key;
  out.kind = OpKind::read;
  out.value = v.value;
  out.version = v.creator;
  out.pair = {v.t_w, v.t_r};
  return true;
}

void MvtoServer::on_message(const Message& m) {
  if (m.kind == MsgKind::ExecuteReq) {
    handle_execute(m);
  } else if (m.kind == MsgKind::CommitAbort) {
    decide(m.tx, m.decision);
  }
}

void MvtoServer::handle_execute(const Message& m) {
  auto [it, fresh] = txs_.try_emplace(m.tx);
  Tx& t = it->second;
  if (fresh) {
    t.client = m.from;
    t.ts = m.ts;
    t.read_only = m.read_only;
  }
  auto reject = [&] {
    Message r;
    r.kind = MsgKind::ExecuteResp;
    r.to = m.from;
    r.tx = m.tx;
    r.shot = m.shot;
    r.round = m.round;
    r.ok = false;
    ctx_->send(std::move(r));
  };
  if (t.done) {
    reject();
    return;
  }
  for (const auto& b : t.batches) {
    if (b.shot == m.shot) return;
  }
  Batch b;
  b.shot = m.shot;
  b.round = m.round;
  b.results.resize(m.ops.size());
  for (std::size_t i = 0; i < m.ops.size(); ++i) {
    const auto& op = m.ops[i];
    if (op.kind == OpKind::write) {
      auto& c = chain(op.key);
      auto idx = below(c, m.ts);
      if (c[idx].t_r > m.ts) {
        ++stats_.conflicts;
        t.batches.push_back(std::move(b));
        decide(m.tx, Decision::aborted);
        reject();
        return;
      }
      if (idx + 1 < c.size() && c[idx + 1].t_w == m.ts) {
        c[idx + 1].value = op.value;
      } else {
        MvtoVersion v;
        v.value = op.value;
        v.t_w = v.t_r = m.ts;
        v.creator = m.tx;
        c.insert(c.begin() + static_cast<std::ptrdiff_t>(idx + 1), v);
        t.writes.push_back(op.key);
      }
      b.results[i] = {op.key, OpKind::write, op.value, m.tx, {m.ts, m.ts}, false};
    } else if (!read(op.key, m.tx, m.ts, b.results[i], m.shot, static_cast<std::uint16_t>(i))) {
      ++b.waiting;
    }
  }
  stats_.executed += m.ops.size();
  t.batches.push_back(std::move(b));
  flush(m.tx, t);
}

void MvtoServer::flush(const TxId& tx, Tx& t) {
  for (auto& b : t.batches) {
    if (b.waiting != 0 || b.round == 0) continue;
    Message r;
    r.kind = MsgKind::ExecuteResp;
    r.to = t.client;
    r.tx = tx;
    r.shot = b.shot;
    r.round = b.round;
    r.read_only = t.read_only;
    r.results = b.results;
    ctx_->send(std::move(r));
    b.round = 0;  // sent
    b.results.clear();
  }
  if (t.read_only && std::all_of(t.batches.begin(), t.batches.end(), [](const Batch& b) { return b.round == 0; })) {
    txs_.erase(tx);
  }
}

void MvtoServer::decide(const TxId& tx, Decision d) {
  auto it = txs_.find(tx);
  if (it == txs_.end()) {
    if (d == Decision::aborted) txs_[tx].done = true;
    return;
  }
  Tx& t = it->second;
  if (t.done) return;
  t.done = true;
  const auto now = ctx_->global_now();
  for (auto key : t.writes) {
    auto& c = chain(key);
    auto vit = std::find_if(c.begin(), c.end(), [&](const MvtoVersion& v) { return v.creator == tx; });
    if (vit == c.end()) continue;
    if (d == Decision::committed) {
      vit->committed = true;
      ++stats_.installs;
      ctx_->trace().add({now, ctx_->self(), TraceKind::write, tx, key, tx, vit->t_w, vit->value.digest});
    } else {
      c.erase(vit);
    }
  }
  auto keys = t.writes;
  t.writes.clear();
  t.batches.clear();
  for (auto key : keys) {
    auto pit = parked_.find(key);
    if (pit == parked_.end()) continue;
    auto waiting = std::move(pit->second);
    parked_.erase(pit);
    for (const auto& p : waiting) {
      auto rit = txs_.find(p.tx);
      if (rit == txs_.end() || rit->second.done) continue;
      Tx& r = rit->second;
      auto bit = std::find_if(r.batches.begin(), r.batches.end(), [&](const Batch& b) { return b.shot == p.shot; });
      if (bit == r.batches.end()) continue;
      if (read(key, p.tx, p.ts, bit->results[p.slot], p.shot, p.slot)) {
        --bit->waiting;
        flush(p.tx, r);
      }
    }
  }
}

}  // namespace ncc
