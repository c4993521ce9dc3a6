#include "ncc/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ncc {

std::int64_t DelayModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::fixed:
      return static_cast<std::int64_t>(a);
    case Kind::uniform:
      return rng.uniform_int(static_cast<std::int64_t>(a), static_cast<std::int64_t>(b));
    case Kind::lognormal:
      return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(rng.lognormal(a, b))));
  }
  return 0;
}

std::int64_t DelayModel::p99() const {
  switch (kind) {
    case Kind::fixed: return static_cast<std::int64_t>(a);
    case Kind::uniform: return static_cast<std::int64_t>(a + 0.99 * (b - a));
    case Kind::lognormal: return static_cast<std::int64_t>(std::exp(a + 2.326 * b));
  }
  return 0;
}

class Sim::NodeContext final : public Context {
 public:
  NodeContext(Sim* sim, NodeId id) : sim_(sim), id_(id) {}

  NodeId self() const override { return id_; }
  std::int64_t now() const override { return sim_->now_ + sim_->nodes_[id_].offset; }
  std::int64_t global_now() const override { return sim_->now_; }
  void send(Message msg) override { sim_->send(id_, std::move(msg)); }
  void set_timer(std::int64_t delay, std::uint64_t tag, bool background) override {
    sim_->push(sim_->now_ + std::max<std::int64_t>(0, delay), EventType::timer, id_, tag, background);
  }
  Trace& trace() override { return sim_->trace_; }

 private:
  Sim* sim_;
  NodeId id_;
};

Sim::Sim(SimConfig cfg, TraceLevel level)
    : cfg_(std::move(cfg)),
      trace_(level),
      rng_(Rng::derive(cfg_.seed, 0)),
      skew_rng_(Rng::derive(cfg_.seed, 1)) {}

Sim::~Sim() = default;

NodeId Sim::add_node(Node* node, NodeRole role) {
  auto id = static_cast<NodeId>(nodes_.size());
  nodes_.emplace_back();
  auto& slot = nodes_.back();
  slot.node = node;
  slot.role = role;
  slot.offset = cfg_.clock_skew > 0 ? skew_rng_.uniform_int(-cfg_.clock_skew, cfg_.clock_skew) : 0;
  slot.ctx = std::make_unique<NodeContext>(this, id);
  node->bind(slot.ctx.get());
  for (const auto& f : cfg_.failures) {
    if (f.node != id) continue;
    if (f.mode == FailureMode::drop_commits) {
      slot.drop_commits_at = std::min(slot.drop_commits_at, f.at);
    } else {
      at(f.at, [this, id] { nodes_[id].stopped = true; }, true);
    }
  }
  push(0, EventType::start, id, 0, false);
  return id;
}

void Sim::set_clock_offset(NodeId n, std::int64_t offset) { nodes_.at(n).offset = offset; }

void Sim::set_link_delay(NodeId from, NodeId to, std::int64_t delay) {
  link_fixed_[(std::uint64_t{from} << 32) | to] = delay;
}

void Sim::set_service_time(NodeId n, std::int64_t fixed) { nodes_.at(n).fixed_service = fixed; }

void Sim::at(std::int64_t time, std::function<void()> fn, bool background) {
  std::uint32_t idx;
  if (!free_callbacks_.empty()) {
    idx = free_callbacks_.back();
    free_callbacks_.pop_back();
    callbacks_[idx] = std::move(fn);
  } else {
    idx = static_cast<std::uint32_t>(callbacks_.size());
    callbacks_.push_back(std::move(fn));
  }
  push(std::max(time, now_), EventType::callback, kNoNode, idx, background);
}

void Sim::push(std::int64_t time, EventType type, NodeId node, std::uint64_t payload, bool background) {
  queue_.push(Event{time, seq_++, type, background, node, payload});
  if (!background) ++foreground_;
}

void Sim::send(NodeId from, Message msg) {
  auto& src = nodes_[from];
  if (src.stopped) return;
  msg.from = from;
  if (msg.to >= nodes_.size()) throw std::out_of_range("send to unknown node");
  if (src.drop_commits_at != INT64_MAX) {
    auto it = src.first_send.find(msg.tx);
    if (it == src.first_send.end()) {
      src.first_send.emplace(msg.tx, now_);
    } else if (msg.kind == MsgKind::CommitAbort && now_ >= src.drop_commits_at &&
               it->second < src.drop_commits_at) {
      ++dropped_;
      return;
    }
  }
  ++sent_;
  ++per_kind_[static_cast<int>(msg.kind)];
  if (trace_.full()) {
    trace_.add({now_, from, TraceKind::send, msg.tx, msg.to, {}, {}, 0,
                static_cast<std::uint64_t>(msg.kind) | (std::uint64_t{msg.round} << 8)});
  }
  if (cfg_.duplicate_prob > 0 && rng_.bernoulli(cfg_.duplicate_prob)) {
    deliver_copy(from, msg.to, msg);
  }
  NodeId to = msg.to;
  deliver_copy(from, to, std::move(msg));
}

void Sim::deliver_copy(NodeId from, NodeId to, Message msg) {
  std::uint64_t link = (std::uint64_t{from} << 32) | to;
  std::int64_t delay;
  if (auto it = link_fixed_.find(link); it != link_fixed_.end()) {
    delay = it->second;
  } else {
    bool ss = nodes_[from].role == NodeRole::server && nodes_[to].role == NodeRole::server;
    delay = (ss ? cfg_.server_server : cfg_.client_server).sample(rng_);
  }
  if (from == to) delay = 0;
  std::int64_t arrival = now_ + std::max<std::int64_t>(0, delay);
  if (!cfg_.reorder) {
    auto& last = link_last_[link];
    arrival = std::max(arrival, last);
    last = arrival;
  }
  std::uint32_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
    pool_[slot] = std::move(msg);
  } else {
    slot = static_cast<std::uint32_t>(pool_.size());
    pool_.push_back(std::move(msg));
  }
  push(arrival, EventType::deliver, to, slot, false);
}

std::int64_t Sim::service_time(NodeId n, const Message& m) {
  auto& slot = nodes_[n];
  if (slot.fixed_service >= 0) return slot.fixed_service;
  if (slot.role != NodeRole::server) return 0;
  auto base = rng_.uniform_int(cfg_.server_service_min, cfg_.server_service_max);
  return base + static_cast<std::int64_t>(cfg_.server_service_per_op * slot.node->work_units(m));
}

void Sim::process_one(NodeId n) {
  auto& slot = nodes_[n];
  auto idx = slot.inbox.front();
  slot.inbox.pop_front();
  Message m = std::move(pool_[idx]);
  free_slots_.push_back(idx);
  slot.busy_until = now_ + service_time(n, m);
  slot.node->on_message(m);
}

void Sim::handle(const Event& ev) {
  switch (ev.type) {
    case EventType::start:
      nodes_[ev.node].node->on_start();
      break;
    case EventType::callback: {
      auto fn = std::move(callbacks_[ev.payload]);
      callbacks_[ev.payload] = nullptr;
      free_callbacks_.push_back(static_cast<std::uint32_t>(ev.payload));
      fn();
      break;
    }
    case EventType::timer:
      if (!nodes_[ev.node].stopped) nodes_[ev.node].node->on_timer(ev.payload);
      break;
    case EventType::deliver: {
      auto& slot = nodes_[ev.node];
      if (slot.stopped) {
        free_slots_.push_back(static_cast<std::uint32_t>(ev.payload));
        ++dropped_;
        break;
      }
      slot.inbox.push_back(static_cast<std::uint32_t>(ev.payload));
      if (slot.scheduled) break;
      if (slot.inbox.size() == 1 && slot.busy_until <= now_) {
        process_one(ev.node);
        if (!nodes_[ev.node].inbox.empty() && !nodes_[ev.node].scheduled) {
          nodes_[ev.node].scheduled = true;
          push(nodes_[ev.node].busy_until, EventType::process, ev.node, 0, false);
        }
      } else {
        slot.scheduled = true;
        push(std::max(now_, slot.busy_until), EventType::process, ev.node, 0, false);
      }
      break;
    }
    case EventType::process: {
      auto& slot = nodes_[ev.node];
      slot.scheduled = false;
      if (slot.stopped) {
        for (auto idx : slot.inbox) free_slots_.push_back(idx);
        dropped_ += slot.inbox.size();
        slot.inbox.clear();
        break;
      }
      if (slot.inbox.empty()) break;
      process_one(ev.node);
      auto& after = nodes_[ev.node];
      if (!after.inbox.empty() && !after.scheduled) {
        after.scheduled = true;
        push(after.busy_until, EventType::process, ev.node, 0, false);
      }
      break;
    }
  }
}

RunStatus Sim::run(std::int64_t until) {
  while (!queue_.empty()) {
    if (foreground_ == 0) return RunStatus::quiescent;
    if (queue_.top().time > until) {
      now_ = until;
      return RunStatus::time_limit;
    }
    if (events_ >= cfg_.event_cap) return RunStatus::event_cap;
    Event ev = queue_.top();
    queue_.pop();
    if (!ev.background) --foreground_;
    now_ = ev.time;
    ++events_;
    handle(ev);
  }
  return RunStatus::quiescent;
}

}  // namespace ncc
