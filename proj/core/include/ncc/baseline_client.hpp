#pragma once

#include "ncc/client.hpp"

namespace ncc {

// Client side of dOCC, d2PL (no-wait and wound-wait) and MVTO.
class BaselineClient : public ClientBase {
 public:
  BaselineClient(Protocol p, ClientConfig cfg, Router route, Generator gen = {}, MetricsCollector* metrics = nullptr);

  Protocol protocol() const { return protocol_; }

 protected:
  void begin(Attempt& a) override;
  void handle(Attempt& a, const Message& m) override;

 private:
  enum Phase { kExecute = 0, kPrepare = 1 };

  void send_shot(Attempt& a);
  void after_execute(Attempt& a);
  void prepare(Attempt& a);
  void commit(Attempt& a);
  void abort_attempt(Attempt& a);

  Protocol protocol_;
};

}  // namespace ncc
