#pragma once

#include <cstdint>

#include "ncc/message.hpp"
#include "ncc/trace.hpp"

namespace ncc {

// What an engine may do to the outside world. Engines never read clocks or
// entropy from anywhere else.
class Context {
 public:
  virtual ~Context() = default;

  virtual NodeId self() const = 0;
  // Local (possibly skewed) clock.
  virtual std::int64_t now() const = 0;
  // True time, used only for history records.
  virtual std::int64_t global_now() const = 0;
  virtual void send(Message msg) = 0;
  // Background timers do not keep a simulation alive on their own.
  virtual void set_timer(std::int64_t delay, std::uint64_t tag, bool background = false) = 0;
  virtual Trace& trace() = 0;
};

class Node {
 public:
  virtual ~Node() = default;

  void bind(Context* ctx) { ctx_ = ctx; }
  Context& ctx() { return *ctx_; }

  virtual void on_start() {}
  virtual void on_message(const Message& msg) = 0;
  virtual void on_timer(std::uint64_t /*tag*/) {}
  // Number of operations in a message, used for service-time accounting.
  virtual std::uint32_t work_units(const Message& msg) const {
    return static_cast<std::uint32_t>(msg.ops.size() + msg.results.size());
  }

 protected:
  Context* ctx_ = nullptr;
};

}  // namespace ncc
