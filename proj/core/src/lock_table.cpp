#include "ncc/lock_table.hpp"

#include <algorithm>

#include "ncc/rng.hpp"

namespace ncc {

bool LockTable::compatible(const Entry& e, const TxId& tx, LockMode mode) {
  if (e.has_exclusive && e.exclusive != tx) return false;
  if (mode == LockMode::shared) return true;
  return std::all_of(e.shared.begin(), e.shared.end(), [&](const TxId& s) { return s == tx; });
}

void LockTable::grant(Entry& e, const TxId& tx, LockMode mode) {
  if (mode == LockMode::exclusive) {
    e.has_exclusive = true;
    e.exclusive = tx;
    e.shared.erase(std::remove(e.shared.begin(), e.shared.end(), tx), e.shared.end());
  } else if (!(e.has_exclusive && e.exclusive == tx) &&
             std::find(e.shared.begin(), e.shared.end(), tx) == e.shared.end()) {
    e.shared.push_back(tx);
  }
}

bool LockTable::try_acquire(Key key, const TxId& tx, LockMode mode, const Timestamp& ts) {
  auto& e = locks_[key];
  if (!compatible(e, tx, mode)) return false;
  if (!e.waiters.empty() && !(ts < e.waiters.front().ts)) return false;
  grant(e, tx, mode);
  auto& t = touched_[tx];
  if (std::find(t.begin(), t.end(), key) == t.end()) t.push_back(key);
  return true;
}

std::vector<TxId> LockTable::conflicts(Key key, const TxId& tx, LockMode mode) const {
  std::vector<TxId> out;
  auto it = locks_.find(key);
  if (it == locks_.end()) return out;
  const auto& e = it->second;
  if (e.has_exclusive && e.exclusive != tx) out.push_back(e.exclusive);
  if (mode == LockMode::exclusive) {
    for (const auto& s : e.shared) {
      if (s != tx) out.push_back(s);
    }
  }
  return out;
}

void LockTable::enqueue(Key key, const TxId& tx, LockMode mode, const Timestamp& ts) {
  auto& w = locks_[key].waiters;
  auto pos = std::find_if(w.begin(), w.end(), [&](const Waiter& x) { return ts < x.ts; });
  w.insert(pos, Waiter{tx, mode, ts});
  auto& t = touched_[tx];
  if (std::find(t.begin(), t.end(), key) == t.end()) t.push_back(key);
}

std::vector<LockGrant> LockTable::release_all(const TxId& tx) {
  std::vector<LockGrant> grants;
  auto tit = touched_.find(tx);
  if (tit == touched_.end()) return grants;
  auto keys = std::move(tit->second);
  touched_.erase(tit);
  for (auto key : keys) {
    auto it = locks_.find(key);
    if (it == locks_.end()) continue;
    auto& e = it->second;
    e.shared.erase(std::remove(e.shared.begin(), e.shared.end(), tx), e.shared.end());
    if (e.has_exclusive && e.exclusive == tx) e.has_exclusive = false;
    e.waiters.erase(std::remove_if(e.waiters.begin(), e.waiters.end(), [&](const Waiter& w) { return w.tx == tx; }),
                    e.waiters.end());
    while (!e.waiters.empty() && compatible(e, e.waiters.front().tx, e.waiters.front().mode)) {
      auto w = e.waiters.front();
      e.waiters.pop_front();
      grant(e, w.tx, w.mode);
      grants.push_back({key, w.tx, w.mode});
    }
    if (e.shared.empty() && !e.has_exclusive && e.waiters.empty()) locks_.erase(it);
  }
  return grants;
}

bool LockTable::holds(Key key, const TxId& tx, LockMode mode) const {
  auto it = locks_.find(key);
  if (it == locks_.end()) return false;
  const auto& e = it->second;
  if (e.has_exclusive && e.exclusive == tx) return true;
  return mode == LockMode::shared && std::find(e.shared.begin(), e.shared.end(), tx) != e.shared.end();
}

std::size_t LockTable::waiting(Key key) const {
  auto it = locks_.find(key);
  return it == locks_.end() ? 0 : it->second.waiters.size();
}

const StoredValue& SingleVersionStore::get(Key key) {
  auto [it, fresh] = data_.try_emplace(key);
  if (fresh) it->second.value = {splitmix64(key), 0};
  return it->second;
}

std::uint64_t SingleVersionStore::install(Key key, Value value, const TxId& tx) {
  auto& v = data_[key];
  v.value = value;
  v.version = tx;
  return ++seq_;
}

}  // namespace ncc
