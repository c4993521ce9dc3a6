#pragma once

#include <map>

#include "ncc/client.hpp"

namespace ncc {

struct NccClientConfig {
  bool read_only_path = true;  // false gives the all-read-write variant
  double delta_weight = 0.2;   // EWMA weight of a new t_delta sample
};

struct ServerProfile {
  double t_delta = 0;  // estimated server execution time minus client send time
  bool sampled = false;
  RoToken token;
};

class NccClient : public ClientBase {
 public:
  NccClient(ClientConfig cfg, NccClientConfig ncfg, Router route, Generator gen = {},
            MetricsCollector* metrics = nullptr);

  // Asynchrony-aware timestamp for a transaction touching `servers`, read at local time `now`.
  Timestamp asynchrony_aware_ts(std::int64_t now, const std::vector<NodeId>& servers) const;
  void update_t_delta(NodeId server, std::int64_t t_c, std::int64_t t_s);
  void set_t_delta(NodeId server, double d);
  const std::map<NodeId, ServerProfile>& profiles() const { return profiles_; }

 protected:
  void begin(Attempt& a) override;
  void handle(Attempt& a, const Message& m) override;

 private:
  enum Phase { kExecute = 0, kSmartRetry = 1 };

  void send_shot(Attempt& a);
  void on_shot_done(Attempt& a);
  void safeguard(Attempt& a);
  void abort_attempt(Attempt& a, Outcome o);
  void note_token(NodeId server, const RoToken& t);

  NccClientConfig ncfg_;
  std::map<NodeId, ServerProfile> profiles_;
};

struct SafeguardResult {
  bool ok = false;
  Timestamp t_prime;  // max t_w
};

SafeguardResult safeguard_check(const std::vector<TimestampPair>& pairs);

}  // namespace ncc
