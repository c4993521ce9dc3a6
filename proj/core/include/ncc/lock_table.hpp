#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "ncc/types.hpp"

namespace ncc {

enum class LockMode : std::uint8_t { shared, exclusive };

struct LockGrant {
  Key key = 0;
  TxId tx;
  LockMode mode = LockMode::shared;
};

class LockTable {
 public:
  // Grants when compatible with every holder and no older waiter is queued.
  bool try_acquire(Key key, const TxId& tx, LockMode mode, const Timestamp& ts);
  // Other transactions whose holds conflict with (tx, mode).
  std::vector<TxId> conflicts(Key key, const TxId& tx, LockMode mode) const;
  // Queues a request in timestamp order.
  void enqueue(Key key, const TxId& tx, LockMode mode, const Timestamp& ts);
  // Drops every hold and queued request of tx, then grants what became compatible.
  std::vector<LockGrant> release_all(const TxId& tx);

  bool holds(Key key, const TxId& tx, LockMode mode) const;
  std::size_t waiting(Key key) const;
  std::size_t locked_keys() const { return locks_.size(); }

 private:
  struct Waiter {
    TxId tx;
    LockMode mode;
    Timestamp ts;
  };
  struct Entry {
    std::vector<TxId> shared;
    TxId exclusive;
    bool has_exclusive = false;
    std::deque<Waiter> waiters;
  };

  static bool compatible(const Entry& e, const TxId& tx, LockMode mode);
  void grant(Entry& e, const TxId& tx, LockMode mode);

  std::unordered_map<Key, Entry> locks_;
  std::unordered_map<TxId, std::vector<Key>, TimestampHash> touched_;
};

// Single-version store shared by the lock- and validation-based baselines.
struct StoredValue {
  Value value;
  TxId version = kInitTx;
};

class SingleVersionStore {
 public:
  const StoredValue& get(Key key);
  // Returns the install sequence number, which orders versions of the key.
  std::uint64_t install(Key key, Value value, const TxId& tx);

 private:
  std::unordered_map<Key, StoredValue> data_;
  std::uint64_t seq_ = 0;
};

}  // namespace ncc
