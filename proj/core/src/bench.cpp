#include "ncc/bench.hpp"

#include "ncc/baseline_client.hpp"
#include "ncc/d2pl.hpp"
#include "ncc/docc.hpp"
#include "ncc/mvto.hpp"
#include "ncc/ncc_client.hpp"

namespace ncc {

std::unique_ptr<Node> make_server(Protocol p, const NccServerConfig& cfg) {
  switch (p) {
    case Protocol::ncc:
    case Protocol::ncc_rw: return std::make_unique<NccServer>(cfg);
    case Protocol::docc: return std::make_unique<DoccServer>();
    case Protocol::d2pl_nw: return std::make_unique<D2plServer>(false);
    case Protocol::d2pl_ww: return std::make_unique<D2plServer>(true);
    case Protocol::mvto: return std::make_unique<MvtoServer>();
  }
  return nullptr;
}

std::unique_ptr<ClientBase> make_client(Protocol p, const ClientConfig& cfg, ClientBase::Router route,
                                        ClientBase::Generator gen, MetricsCollector* metrics) {
  if (is_ncc(p)) {
    NccClientConfig ncfg;
    ncfg.read_only_path = p == Protocol::ncc;
    return std::make_unique<NccClient>(cfg, ncfg, std::move(route), std::move(gen), metrics);
  }
  return std::make_unique<BaselineClient>(p, cfg, std::move(route), std::move(gen), metrics);
}

BenchResult run_benchmark(const BenchConfig& cfg) {
  BenchResult res;
  SimConfig sc = cfg.sim;
  sc.seed = cfg.seed;
  const NodeId first_client = cfg.servers;
  if (cfg.crash_at >= 0) {
    for (std::uint32_t c = 0; c < cfg.clients; ++c) sc.failures.push_back({first_client + c, cfg.crash_at, cfg.crash_mode});
  }
  Sim sim(sc, cfg.trace_level);
  auto workload = std::make_shared<const Workload>(cfg.workload, cfg.servers);

  std::vector<std::unique_ptr<Node>> servers;
  for (std::uint32_t s = 0; s < cfg.servers; ++s) {
    servers.push_back(make_server(cfg.protocol, cfg.ncc));
    sim.add_node(servers.back().get(), NodeRole::server);
  }
  auto route = [workload](Key k) { return static_cast<NodeId>(workload->route(k)); };
  auto gen = [workload](Rng& rng) { return workload->next(rng); };
  const std::int64_t stop_at = cfg.start_at + cfg.duration;
  std::vector<std::unique_ptr<ClientBase>> clients;
  for (std::uint32_t c = 0; c < cfg.clients; ++c) {
    ClientConfig cc = cfg.client;
    cc.client_id = c;
    cc.seed = cfg.seed;
    cc.rate = cfg.rate;
    cc.start_at = cfg.start_at;
    cc.stop_at = stop_at;
    clients.push_back(make_client(cfg.protocol, cc, route, gen, &res.metrics));
    sim.add_node(clients.back().get(), NodeRole::client);
  }

  res.status = sim.run(stop_at + cfg.drain_limit);
  res.end_time = sim.now();
  for (int k = 0; k < kMsgKindCount; ++k) res.messages[static_cast<std::size_t>(k)] = sim.messages_of(static_cast<MsgKind>(k));
  for (auto& s : servers) {
    if (auto* n = dynamic_cast<NccServer*>(s.get())) {
      const auto& st = n->stats();
      res.ncc.executed += st.executed;
      res.ncc.early_aborts += st.early_aborts;
      res.ncc.ro_aborts += st.ro_aborts;
      res.ncc.reexecuted_reads += st.reexecuted_reads;
      res.ncc.delayed_responses += st.delayed_responses;
      res.ncc.responses += st.responses;
      res.ncc.gc_reclaimed += st.gc_reclaimed;
      res.ncc.unknown_commits += st.unknown_commits;
      res.ncc.conflicting_decisions += st.conflicting_decisions;
      res.ncc.recoveries += st.recoveries;
      res.invariants_ok = res.invariants_ok && n->check_invariants();
    }
  }
  res.report = summarize(res.metrics, cfg.duration);
  res.report.protocol = std::string(to_string(cfg.protocol));
  res.report.workload = std::string(to_string(cfg.workload.kind));
  res.report.seed = cfg.seed;
  res.report.messages = sim.messages_sent();
  res.report.events = sim.events();
  res.trace = std::move(sim.trace().records());
  return res;
}

}  // namespace ncc
