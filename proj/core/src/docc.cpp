#include "ncc/docc.hpp"

namespace ncc {

void DoccServer::on_message(const Message& m) {
  switch (m.kind) {
    case MsgKind::ExecuteReq: {
      Message r;
      r.kind = MsgKind::ExecuteResp;
      r.to = m.from;
      r.tx = m.tx;
      r.shot = m.shot;
      r.round = m.round;
      for (const auto& op : m.ops) {
        OpResult res;
        res.key = op.key;
        res.kind = op.kind;
        if (op.kind == OpKind::read) {
          const auto& v = store_.get(op.key);
          res.value = v.value;
          res.version = v.version;
        }
        r.results.push_back(res);
      }
      stats_.executed += m.ops.size();
      ctx_->send(std::move(r));
      break;
    }
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

void DoccServer::handle_prepare(const Message& m) {
  auto& p = txs_[m.tx];
  Message r;
  r.kind = MsgKind::PrepareResp;
  r.to = m.from;
  r.tx = m.tx;
  r.round = m.round;
  if (p.aborted) {
    r.ok = false;
    ctx_->send(std::move(r));
    return;
  }
  if (p.prepared) {
    ctx_->send(std::move(r));
    return;
  }
  bool ok = true;
  for (const auto& op : m.ops) {
    auto mode = op.kind == OpKind::read ? LockMode::shared : LockMode::exclusive;
    if (!locks_.try_acquire(op.key, m.tx, mode, m.ts)) {
      ++stats_.conflicts;
      ok = false;
      break;
    }
    if (op.kind == OpKind::read && store_.get(op.key).version != op.version) {
      ++stats_.validation_failures;
      ok = false;
      break;
    }
  }
  if (ok) {
    p.prepared = true;
    for (const auto& op : m.ops) {
      if (op.kind == OpKind::write) p.writes.push_back(op);
    }
  } else {
    locks_.release_all(m.tx);
    p.aborted = true;
  }
  r.ok = ok;
  ctx_->send(std::move(r));
}

void DoccServer::handle_decision(const Message& m) {
  auto it = txs_.find(m.tx);
  if (m.decision == Decision::aborted) {
    locks_.release_all(m.tx);
    txs_[m.tx] = Prepared{{}, false, true};
    return;
  }
  if (it == txs_.end() || !it->second.prepared) return;
  const auto now = ctx_->global_now();
  for (const auto& op : it->second.writes) {
    auto seq = store_.install(op.key, op.value, m.tx);
    ++stats_.installs;
    ctx_->trace().add({now, ctx_->self(), TraceKind::write, m.tx, op.key, m.tx,
                       Timestamp{static_cast<std::int64_t>(seq), 0}, op.value.digest});
  }
  locks_.release_all(m.tx);
  txs_.erase(it);
}

}  // namespace ncc
