#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ncc/metrics.hpp"
#include "ncc/rng.hpp"
#include "ncc/transport.hpp"

namespace ncc {

// A transaction's logic. Shot 0 is `first`; later shots are produced from
// every result seen so far, so they may depend on values read earlier.
struct TxProgram {
  std::string label;
  bool read_only = false;
  std::uint16_t num_shots = 1;
  std::vector<Op> first;
  std::function<std::vector<Op>(std::uint16_t shot, const std::vector<OpResult>& so_far)> next;
};

struct TxOutcome {
  bool committed = false;
  TxId tx;
  Timestamp commit_ts;
  std::uint32_t attempts = 0;
  std::uint16_t rounds = 0;
  std::vector<OpResult> results;
};

struct ClientConfig {
  std::uint32_t client_id = 0;  // dense, used in timestamps
  std::uint64_t seed = 1;
  double rate = 0;  // open-loop arrivals per virtual second; 0 disables the generator
  std::int64_t start_at = 0;
  std::int64_t stop_at = INT64_MAX;  // global time after which no new arrivals are generated
  std::uint32_t max_outstanding = 4;
  std::size_t backlog_cap = 256;
  std::int64_t rtt = 300;  // backoff base
  std::uint32_t max_attempts = 64;
  std::uint32_t ro_fallback = 3;  // read-only aborts before retrying on the read-write path
};

class ClientBase : public Node {
 public:
  using Router = std::function<NodeId(Key)>;
  using Generator = std::function<TxProgram(Rng&)>;
  using Callback = std::function<void(const TxOutcome&)>;

  ClientBase(ClientConfig cfg, Router route, Generator gen = {}, MetricsCollector* metrics = nullptr);

  void submit(TxProgram prog, Callback cb = {});

  void on_start() override;
  void on_timer(std::uint64_t tag) override;
  void on_message(const Message& m) final;

  const ClientConfig& config() const { return cfg_; }
  std::size_t active() const { return attempts_.size(); }
  std::size_t backlog() const { return backlog_.size(); }
  std::uint64_t finished() const { return finished_; }

 protected:
  struct Attempt {
    std::uint64_t lid = 0;
    TxProgram prog;
    Callback cb;
    std::uint32_t attempts = 0;
    std::uint32_t ro_aborts = 0;
    bool force_rw = false;

    // Current attempt.
    bool live = false;
    bool read_only = false;
    TxId tx;
    std::int64_t begin = 0;
    std::uint16_t shot = 0;
    std::uint16_t rounds = 0;
    std::uint32_t pending = 0;
    int phase = 0;
    bool delayed = false;
    NodeId backup = kNoNode;
    Timestamp commit_ts;
    std::vector<Op> shot_ops;
    std::vector<Op> all_ops;
    std::vector<OpResult> results;  // all shots, in issue order
    std::size_t shot_base = 0;      // index of the current shot's first result
    std::map<NodeId, std::vector<std::uint16_t>> shot_slots;
    std::map<NodeId, std::uint32_t> requests;  // ops sent per participant
    std::vector<NodeId> failed;                // participants that already dropped the attempt
    std::vector<NodeId> acked;                 // replies seen in the current phase
  };

  virtual void begin(Attempt& a) = 0;
  virtual void handle(Attempt& a, const Message& m) = 0;
  virtual void handle_orphan(const Message&) {}

  Timestamp unique_ts(std::int64_t physical);
  void bind_tx(Attempt& a, const TxId& tx);
  // Groups the shot's ops by server and fills a.shot_slots and a.requests.
  void route_shot(Attempt& a, std::vector<Op> ops);
  void store_results(Attempt& a, NodeId from, const std::vector<OpResult>& res);
  void send_to_participants(Attempt& a, MsgKind kind, Decision d, std::uint16_t round);

  void finish_commit(Attempt& a, Outcome o, const Timestamp& commit_ts);
  void finish_abort(Attempt& a, Outcome o);

  Router route_;
  Rng rng_;

 private:
  void start(std::uint64_t lid);
  void schedule_arrival();
  void done(std::uint64_t lid);

  ClientConfig cfg_;
  Generator gen_;
  MetricsCollector* metrics_;
  std::unordered_map<std::uint64_t, Attempt> attempts_;
  std::unordered_map<TxId, std::uint64_t, TimestampHash> by_tx_;
  std::deque<std::pair<TxProgram, Callback>> backlog_;
  std::uint64_t next_lid_ = 1;
  std::uint64_t finished_ = 0;
  std::int64_t last_phys_ = INT64_MIN;
};

}  // namespace ncc
