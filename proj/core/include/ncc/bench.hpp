#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "ncc/client.hpp"
#include "ncc/metrics.hpp"
#include "ncc/ncc_server.hpp"
#include "ncc/simnet.hpp"
#include "ncc/workload.hpp"

namespace ncc {

struct BenchConfig {
  Protocol protocol = Protocol::ncc;
  WorkloadSpec workload;
  std::uint64_t seed = 1;
  std::uint32_t servers = 4;
  std::uint32_t clients = 16;
  double rate = 2000;  // arrivals per client per virtual second
  std::int64_t start_at = 1000;
  std::int64_t duration = 500'000;  // arrival window
  std::int64_t drain_limit = 30'000'000;
  SimConfig sim;
  NccServerConfig ncc;
  ClientConfig client;  // id, seed, rate and the arrival window are filled in per client
  TraceLevel trace_level = TraceLevel::history;
  std::int64_t crash_at = -1;  // inject a failure into every client at this time
  FailureMode crash_mode = FailureMode::drop_commits;
};

struct BenchResult {
  MetricsReport report;
  MetricsCollector metrics;
  std::vector<TraceRecord> trace;
  RunStatus status = RunStatus::quiescent;
  std::int64_t end_time = 0;
  std::array<std::uint64_t, kMsgKindCount> messages{};
  NccServerStats ncc;  // summed over servers
  bool invariants_ok = true;
};

std::unique_ptr<Node> make_server(Protocol p, const NccServerConfig& cfg = {});
std::unique_ptr<ClientBase> make_client(Protocol p, const ClientConfig& cfg, ClientBase::Router route,
                                        ClientBase::Generator gen = {}, MetricsCollector* metrics = nullptr);

BenchResult run_benchmark(const BenchConfig& cfg);

}  // namespace ncc
