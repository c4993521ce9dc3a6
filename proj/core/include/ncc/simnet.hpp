#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <queue>
#include <unordered_map>
#include <vector>

#include "ncc/rng.hpp"
#include "ncc/transport.hpp"

namespace ncc {

struct DelayModel {
  enum class Kind : std::uint8_t { fixed, uniform, lognormal };

  Kind kind = Kind::uniform;
  double a = 100;  // fixed delay, uniform min, or lognormal mu (of ln microseconds)
  double b = 200;  // uniform max, or lognormal sigma

  static DelayModel fixed(std::int64_t d) { return {Kind::fixed, static_cast<double>(d), 0}; }
  static DelayModel uniform(std::int64_t lo, std::int64_t hi) {
    return {Kind::uniform, static_cast<double>(lo), static_cast<double>(hi)};
  }
  static DelayModel lognormal(double mu, double sigma) { return {Kind::lognormal, mu, sigma}; }

  std::int64_t sample(Rng& rng) const;
  // Upper estimate used to size retention windows.
  std::int64_t p99() const;
};

enum class NodeRole : std::uint8_t { server, client };

enum class FailureMode : std::uint8_t { drop_commits, full_stop };

struct FailureInjection {
  NodeId node = kNoNode;
  std::int64_t at = 0;
  FailureMode mode = FailureMode::drop_commits;
};

struct SimConfig {
  std::uint64_t seed = 1;
  DelayModel client_server = DelayModel::uniform(100, 200);
  DelayModel server_server = DelayModel::uniform(100, 200);
  bool reorder = false;
  double duplicate_prob = 0.0;
  std::int64_t clock_skew = 50;  // each node's offset is uniform in [-skew, skew]
  std::int64_t server_service_min = 2;
  std::int64_t server_service_max = 5;
  double server_service_per_op = 0.25;
  std::uint64_t event_cap = 2'000'000'000ULL;
  std::vector<FailureInjection> failures;
};

enum class RunStatus : std::uint8_t { quiescent, time_limit, event_cap };

class Sim {
 public:
  explicit Sim(SimConfig cfg, TraceLevel level = TraceLevel::history);
  ~Sim();
  Sim(const Sim&) = delete;
  Sim& operator=(const Sim&) = delete;

  NodeId add_node(Node* node, NodeRole role);
  void set_clock_offset(NodeId n, std::int64_t offset);
  std::int64_t clock_offset(NodeId n) const { return nodes_[n].offset; }
  // Fixed one-way delay for a directed link, overriding the model.
  void set_link_delay(NodeId from, NodeId to, std::int64_t delay);
  void set_service_time(NodeId n, std::int64_t fixed);

  void at(std::int64_t time, std::function<void()> fn, bool background = false);

  RunStatus run(std::int64_t until = INT64_MAX);

  std::int64_t now() const { return now_; }
  Trace& trace() { return trace_; }
  const SimConfig& config() const { return cfg_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool stopped(NodeId n) const { return nodes_[n].stopped; }

  std::uint64_t events() const { return events_; }
  std::uint64_t messages_sent() const { return sent_; }
  std::uint64_t messages_dropped() const { return dropped_; }
  std::uint64_t messages_of(MsgKind k) const { return per_kind_[static_cast<int>(k)]; }

 private:
  class NodeContext;

  enum class EventType : std::uint8_t { start, deliver, process, timer, callback };

  struct Event {
    std::int64_t time;
    std::uint64_t seq;
    EventType type;
    bool background;
    NodeId node;
    std::uint64_t payload;
  };

  struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct NodeSlot {
    Node* node = nullptr;
    NodeRole role = NodeRole::server;
    std::int64_t offset = 0;
    std::int64_t busy_until = 0;
    std::int64_t fixed_service = -1;
    std::deque<std::uint32_t> inbox;
    bool scheduled = false;
    bool stopped = false;
    std::int64_t drop_commits_at = INT64_MAX;
    std::unique_ptr<NodeContext> ctx;
    std::unordered_map<TxId, std::int64_t, TimestampHash> first_send;
  };

  void push(std::int64_t time, EventType type, NodeId node, std::uint64_t payload, bool background);
  void send(NodeId from, Message msg);
  void deliver_copy(NodeId from, NodeId to, Message msg);
  void handle(const Event& ev);
  void process_one(NodeId n);
  std::int64_t service_time(NodeId n, const Message& m);

  SimConfig cfg_;
  Trace trace_;
  Rng rng_;
  Rng skew_rng_;
  std::int64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t foreground_ = 0;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  std::array<std::uint64_t, kMsgKindCount> per_kind_{};
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::vector<NodeSlot> nodes_;
  std::vector<Message> pool_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<std::function<void()>> callbacks_;
  std::vector<std::uint32_t> free_callbacks_;
  std::unordered_map<std::uint64_t, std::int64_t> link_last_;
  std::unordered_map<std::uint64_t, std::int64_t> link_fixed_;
};

}  // namespace ncc
