#pragma once

#include <unordered_map>
#include <vector>

#include "ncc/docc.hpp"

namespace ncc {

// Distributed strict two-phase locking. No-wait aborts on any unavailable
// lock; wound-wait lets a larger timestamp wait and makes a smaller one
// wound unprepared holders.
class D2plServer : public Node {
 public:
  explicit D2plServer(bool wound_wait) : wound_wait_(wound_wait) {}

  void on_message(const Message& m) override;

  const BaselineStats& stats() const { return stats_; }
  SingleVersionStore& store() { return store_; }
  const LockTable& locks() const { return locks_; }

 private:
  struct Pending {
    std::uint16_t shot = 0;
    std::uint16_t round = 0;
    std::vector<Op> ops;
    std::vector<bool> granted;
    std::uint32_t waiting = 0;
  };
  struct Tx {
    NodeId client = kNoNode;
    Timestamp ts;
    bool prepared = false;
    bool aborted = false;
    std::vector<Op> writes;
    std::vector<Pending> pending;
  };

  void handle_execute(const Message& m);
  void handle_prepare(const Message& m);
  void handle_decision(const Message& m);
  void abort_local(const TxId& tx);
  void apply_grants(const std::vector<LockGrant>& grants);
  void maybe_respond(const TxId& tx, Tx& t);
  void respond(const TxId& tx, Tx& t, Pending& p, bool ok);

  bool wound_wait_;
  SingleVersionStore store_;
  LockTable locks_;
  std::unordered_map<TxId, Tx, TimestampHash> txs_;
  BaselineStats stats_;
};

}  // namespace ncc
