#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ncc/transport.hpp"

namespace ncc {

struct NccServerConfig {
  bool rtc = true;  // response timing control; off only in tests
  bool early_abort = true;
  std::int64_t retention = 800;
  std::int64_t gc_interval = 20'000;
  std::int64_t tx_ttl = 50'000;
  std::int64_t recovery_timeout = 1'000'000;  // 0 disables client-failure recovery
};

struct Version {
  Value value;
  Timestamp t_w;
  Timestamp t_r;
  TxId creator;
  bool committed = false;
  TxId tr_owner = kInitTx;  // transaction whose read produced t_r
  Timestamp tr_second;      // largest read timestamp of any other transaction
  std::uint64_t commit_seq = 0;
  std::uint32_t pins = 0;  // undecided readers
  bool read_by_other = false;
  std::int64_t touched_at = 0;
};

struct QueueItem {
  TxId tx;
  OpKind kind = OpKind::read;
  Timestamp ts;
  Decision status = Decision::undecided;
  bool released = false;
  std::uint16_t shot = 0;
  std::uint16_t slot = 0;
  TxId observed;
  std::uint64_t exec_event = 0;
};

struct NccServerStats {
  std::uint64_t executed = 0;
  std::uint64_t early_aborts = 0;
  std::uint64_t ro_aborts = 0;
  std::uint64_t reexecuted_reads = 0;
  std::uint64_t delayed_responses = 0;
  std::uint64_t responses = 0;
  std::uint64_t gc_reclaimed = 0;
  std::uint64_t unknown_commits = 0;
  std::uint64_t conflicting_decisions = 0;
  std::uint64_t recoveries = 0;
};

class NccServer : public Node {
 public:
  explicit NccServer(NccServerConfig cfg = {});
  ~NccServer() override;

  void on_start() override;
  void on_message(const Message& msg) override;
  void on_timer(std::uint64_t tag) override;

  // Installs a committed version; for tests and scenario setup.
  void seed_version(Key key, Value value, TimestampPair pair, TxId creator = kInitTx);

  const std::vector<Version>& versions(Key key);
  const std::vector<QueueItem>& queue(Key key);
  Timestamp watermark() const { return watermark_; }
  RoToken token() const { return {max_committed_tw_, commit_seq_}; }
  Decision decision_of(const TxId& tx) const;
  bool knows(const TxId& tx) const { return txs_.count(tx) != 0; }

  void apply_decision(const TxId& tx, Decision d);
  SrState try_smart_retry(const TxId& tx, const Timestamp& t_prime);
  std::size_t garbage_collect();
  // The reply a cohort would send to a recovery query, regardless of pending responses.
  Message recover_query(const TxId& tx);

  // Per key: t_w strictly increasing, t_w <= t_r.
  bool check_invariants() const;

  const NccServerStats& stats() const { return stats_; }
  const NccServerConfig& config() const { return cfg_; }

 private:
  struct KeyState {
    std::vector<Version> versions;
    std::vector<QueueItem> queue;
    bool gc_candidate = false;
  };

  struct TxOpRec {
    Key key = 0;
    OpKind kind = OpKind::read;
    std::uint16_t shot = 0;
    std::uint16_t slot = 0;
    TxId observed;
  };

  struct Batch {
    std::uint16_t shot = 0;
    std::uint16_t round = 0;
    std::int64_t t_c = 0;
    std::int64_t t_s = 0;
    NodeId client = kNoNode;
    std::uint32_t pending = 0;
    bool sent = false;
    std::vector<OpResult> results;
  };

  struct Recovery;

  struct ServerTx {
    NodeId client = kNoNode;
    NodeId backup = kNoNode;
    Timestamp ts;
    Decision decision = Decision::undecided;
    bool tombstone = false;
    SrState sr = SrState::none;
    Timestamp sr_t;
    std::vector<TxOpRec> ops;
    std::vector<Batch> batches;
    std::uint32_t unreleased = 0;
    std::int64_t last_activity = 0;
    std::int64_t decided_at = 0;
    std::int64_t trigger_at = INT64_MIN;
    bool registered = false;
    std::vector<CohortEntry> cohorts;
    std::vector<NodeId> query_waiters;
    std::vector<NodeId> decision_waiters;
    std::unique_ptr<Recovery> recovery;
  };

  KeyState& key_state(Key key);
  static int find_version(const KeyState& ks, const TxId& creator);
  static void raise_read(Version& v, const Timestamp& t, const TxId& reader);

  void handle_execute(const Message& m);
  void handle_read_only(const Message& m);
  void handle_smart_retry(const Message& m);
  void handle_recover_query(const Message& m);
  void handle_recover_reply(const Message& m);
  void handle_recover_trigger(const Message& m);
  void handle_cohort_notice(const Message& m);
  void handle_smart_retry_resp(const Message& m);

  bool would_block(Key key, const TxId& tx, OpKind kind);
  void execute_op(const TxId& tx, ServerTx& st, const Op& op, const Timestamp& ts, std::uint16_t shot,
                  std::uint16_t slot);
  void reexecute_read(Key key, const TxId& tx, const Timestamp& ts, std::uint16_t shot, std::uint16_t slot);
  void release(const TxId& tx, ServerTx& st, std::uint16_t shot, std::uint16_t slot, bool delayed);
  void pump(Key key);
  void early_abort(const TxId& tx, ServerTx& st, NodeId client, std::uint16_t shot, std::uint16_t round);
  void decide(const TxId& tx, Decision d, bool tombstone);
  Batch* batch_of(ServerTx& st, std::uint16_t shot);

  Message make_recover_reply(const TxId& tx, const ServerTx& st) const;
  void answer_queries(const TxId& tx, ServerTx& st);
  void start_recovery(const TxId& tx, ServerTx& st);
  void maybe_finish_recovery(const TxId& tx, ServerTx& st);
  void finish_recovery(const TxId& tx, ServerTx& st, Decision d);
  void arm_scan();
  void scan();
  void expire_records();

  NccServerConfig cfg_;
  NccServerStats stats_;
  std::unordered_map<Key, KeyState> keys_;
  std::unordered_map<TxId, ServerTx, TimestampHash> txs_;
  std::vector<Key> gc_candidates_;
  std::deque<std::pair<std::int64_t, TxId>> expiry_;
  Timestamp watermark_ = kInitTx;
  Timestamp max_committed_tw_ = kInitTx;
  std::uint64_t commit_seq_ = 0;
  std::uint64_t event_no_ = 0;
  std::uint64_t undecided_ = 0;
  bool scan_armed_ = false;
};

}  // namespace ncc
