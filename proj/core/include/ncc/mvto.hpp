#pragma once

#include <unordered_map>
#include <vector>

#include "ncc/docc.hpp"

namespace ncc {

struct MvtoVersion {
  Value value;
  Timestamp t_w;
  Timestamp t_r;
  TxId creator;
  bool committed = false;
};

// Multi-version timestamp ordering. Reads take the latest version below
// their timestamp and wait if it is undecided; writes abort when a later
// read already passed over the slot they would occupy.
class MvtoServer : public Node {
 public:
  void on_message(const Message& m) override;

  const std::vector<MvtoVersion>& versions(Key key);
  const BaselineStats& stats() const { return stats_; }

 private:
  struct Batch {
    std::uint16_t shot = 0;
    std::uint16_t round = 0;
    std::vector<OpResult> results;
    std::uint32_t waiting = 0;
  };
  struct Tx {
    NodeId client = kNoNode;
    Timestamp ts;
    bool read_only = false;
    bool done = false;
    std::vector<Key> writes;
    std::vector<Batch> batches;
  };
  struct Parked {
    TxId tx;
    Timestamp ts;
    std::uint16_t shot;
    std::uint16_t slot;
  };

  std::vector<MvtoVersion>& chain(Key key);
  // Returns false when the read had to wait.
  bool read(Key key, const TxId& tx, const Timestamp& ts, OpResult& out, std::uint16_t shot, std::uint16_t slot);
  void handle_execute(const Message& m);
  void decide(const TxId& tx, Decision d);
  void flush(const TxId& tx, Tx& t);

  std::unordered_map<Key, std::vector<MvtoVersion>> data_;
  std::unordered_map<Key, std::vector<Parked>> parked_;
  std::unordered_map<TxId, Tx, TimestampHash> txs_;
  BaselineStats stats_;
};

}  // namespace ncc
