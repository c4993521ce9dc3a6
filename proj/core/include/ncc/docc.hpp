#pragma once

#include <unordered_map>
#include <vector>

#include "ncc/lock_table.hpp"
#include "ncc/transport.hpp"

namespace ncc {

struct BaselineStats {
  std::uint64_t executed = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t validation_failures = 0;
  std::uint64_t wounds = 0;
  std::uint64_t installs = 0;
};

// Distributed OCC: execute reads, then prepare (lock and validate), then commit.
class DoccServer : public Node {
 public:
  void on_message(const Message& m) override;

  const BaselineStats& stats() const { return stats_; }
  SingleVersionStore& store() { return store_; }
  const LockTable& locks() const { return locks_; }

 private:
  struct Prepared {
    std::vector<Op> writes;
    bool prepared = false;
    bool aborted = false;
  };

  void handle_prepare(const Message& m);
  void handle_decision(const Message& m);

  SingleVersionStore store_;
  LockTable locks_;
  std::unordered_map<TxId, Prepared, TimestampHash> txs_;
  BaselineStats stats_;
};

}  // namespace ncc
