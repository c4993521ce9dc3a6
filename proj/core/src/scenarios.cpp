#include "ncc/scenarios.hpp"

#include <memory>
#include <sstream>

#include "ncc/bench.hpp"
#include "ncc/ncc_client.hpp"
#include "ncc/ncc_server.hpp"

namespace ncc {

namespace {

class Cluster {
 public:
  explicit Cluster(SimConfig sc) : sim(std::move(sc)) {}

  NodeId add_server(Protocol p, const NccServerConfig& cfg = {}) {
    servers_.push_back(make_server(p, cfg));
    return sim.add_node(servers_.back().get(), NodeRole::server);
  }

  template <typename T = ClientBase>
  T& add_client(Protocol p, std::uint32_t client_id, NodeId& id, std::uint32_t max_attempts = 64) {
    ClientConfig cc;
    cc.client_id = client_id;
    cc.seed = client_id;
    cc.max_attempts = max_attempts;
    clients_.push_back(make_client(p, cc, [](Key k) { return static_cast<NodeId>(k); }));
    id = sim.add_node(clients_.back().get(), NodeRole::client);
    return static_cast<T&>(*clients_.back());
  }

  NccServer& ncc(NodeId id) { return static_cast<NccServer&>(*servers_.at(id)); }

  Sim sim;

 private:
  std::vector<std::unique_ptr<Node>> servers_;
  std::vector<std::unique_ptr<ClientBase>> clients_;
};

SimConfig quiet_sim(std::uint64_t seed = 1) {
  SimConfig sc;
  sc.seed = seed;
  sc.clock_skew = 0;
  sc.client_server = DelayModel::fixed(5);
  sc.server_server = DelayModel::fixed(5);
  return sc;
}

TxProgram program(std::vector<Op> ops, bool read_only = false) {
  TxProgram p;
  p.read_only = read_only;
  p.first = std::move(ops);
  return p;
}

Op rd(Key k) { return {k, OpKind::read, {}, {}}; }
Op wr(Key k, std::uint64_t digest) { return {k, OpKind::write, {digest, 8}, {}}; }

std::string pair_str(const TimestampPair& p) {
  return "(" + std::to_string(p.t_w.physical) + "," + std::to_string(p.t_r.physical) + ")";
}

std::string outcome_str(const TxOutcome& o) {
  std::ostringstream os;
  if (o.committed) {
    os << "committed at " << o.commit_ts.str();
  } else {
    os << "gave up";
  }
  os << " after " << o.attempts << (o.attempts == 1 ? " attempt" : " attempts") << ", " << o.rounds << " rounds";
  return os.str();
}

TxId first_attempt(const std::vector<TraceRecord>& trace, std::uint32_t client_id) {
  for (const auto& r : trace) {
    if (r.kind == TraceKind::tx_begin && r.tx.client_id == client_id) return r.tx;
  }
  return {};
}

void finish(ScenarioResult& res, Sim& sim) {
  res.trace = sim.trace().records();
  res.check = check_trace(res.trace);
}

}  // namespace

ScenarioResult fig4a(bool asynchrony_aware) {
  ScenarioResult res;
  res.name = "fig4a";
  Cluster c(quiet_sim());
  NodeId a = c.add_server(Protocol::ncc);
  NodeId b = c.add_server(Protocol::ncc);
  NodeId n1 = 0;
  NodeId n2 = 0;
  auto& cl1 = c.add_client<NccClient>(Protocol::ncc, 1, n1);
  auto& cl2 = c.add_client<NccClient>(Protocol::ncc, 2, n2);
  c.sim.set_link_delay(n1, a, 0);
  c.sim.set_link_delay(n1, b, 10);
  c.sim.set_link_delay(n2, b, 5);
  c.sim.set_service_time(a, 0);
  c.sim.set_service_time(b, 0);
  if (asynchrony_aware) {
    cl1.set_t_delta(a, 0);
    cl1.set_t_delta(b, 10);
    cl2.set_t_delta(a, 0);
    cl2.set_t_delta(b, 5);
  }
  TxOutcome o1;
  TxOutcome o2;
  c.sim.at(1004, [&] { cl1.submit(program({wr(a, 11), wr(b, 12)}), [&](const TxOutcome& o) { o1 = o; }); });
  c.sim.at(1005, [&] { cl2.submit(program({wr(b, 21)}), [&](const TxOutcome& o) { o2 = o; }); });
  c.sim.run();
  finish(res, c.sim);
  auto t1 = first_attempt(res.trace, 1);
  auto t2 = first_attempt(res.trace, 2);
  std::string mode = asynchrony_aware ? "t_delta {A:0,B:10} / {A:0,B:5}" : "no t_delta";
  res.lines.push_back(mode + ": tx1 sent at 1004, pre-assigned " + t1.str() + ", " + outcome_str(o1));
  res.lines.push_back(mode + ": tx2 sent at 1005, pre-assigned " + t2.str() + ", " + outcome_str(o2));
  if (o1.committed && o1.results.size() == 2) {
    res.lines.push_back(mode + ": tx1 pairs " + pair_str(o1.results[0].pair) + " " + pair_str(o1.results[1].pair));
  }
  if (asynchrony_aware) {
    res.ok = t1 == Timestamp{1014, 1} && t2 == Timestamp{1010, 2} && o1.committed && o2.committed &&
             o1.attempts == 1 && o2.attempts == 1 && res.check.verdict == Verdict::ok;
  } else {
    res.ok = t1 == Timestamp{1004, 1} && t2 == Timestamp{1005, 2} && res.check.verdict == Verdict::ok;
  }
  return res;
}

ScenarioResult fig4b_smart_retry() {
  ScenarioResult res;
  res.name = "fig4b-smart-retry";
  Cluster c(quiet_sim());
  NodeId a = c.add_server(Protocol::ncc);
  NodeId b = c.add_server(Protocol::ncc);
  c.ncc(a).seed_version(a, {100, 8}, {{0, 0}, {0, 0}});
  c.ncc(b).seed_version(b, {200, 8}, {{0, 0}, {5, 0}});
  NodeId n1 = 0;
  auto& cl = c.add_client(Protocol::ncc, 1, n1);
  TxOutcome out;
  c.sim.at(4, [&] { cl.submit(program({rd(a), wr(b, 7)}), [&](const TxOutcome& o) { out = o; }); });
  c.sim.run();
  finish(res, c.sim);
  auto tx = first_attempt(res.trace, 1);
  res.lines.push_back("tx1 pre-assigned " + tx.str());
  if (out.results.size() == 2) {
    res.lines.push_back("responses: read A0 " + pair_str(out.results[0].pair) + ", write B1 " +
                        pair_str(out.results[1].pair));
    auto sg = safeguard_check({out.results[0].pair, out.results[1].pair});
    res.lines.push_back(std::string("safeguard ") + (sg.ok ? "passed" : "rejected") + ", t'=" +
                        std::to_string(sg.t_prime.physical));
  }
  if (out.committed) {
    res.lines.push_back("smart retry succeeded on both servers");
    res.lines.push_back("committed at t'=" + std::to_string(out.commit_ts.physical));
  } else {
    res.lines.push_back("aborted");
  }
  const auto& a0 = c.ncc(a).versions(a).front();
  res.lines.push_back("A0 now " + pair_str({a0.t_w, a0.t_r}));
  res.ok = out.committed && out.attempts == 1 && out.rounds == 3 && out.commit_ts.physical == 6 &&
           out.results.size() == 2 && out.results[0].pair == TimestampPair{{0, 0}, {4, 1}} &&
           out.results[1].pair == TimestampPair{{6, 0}, {6, 0}} && res.check.verdict == Verdict::ok;
  return res;
}

ScenarioResult rtc_inversion(std::uint64_t seed, bool rtc) {
  ScenarioResult res;
  res.name = "rtc-inversion";
  SimConfig sc = quiet_sim(seed);
  sc.client_server = DelayModel::uniform(1, 10);
  Cluster c(sc);
  NccServerConfig nc;
  nc.rtc = rtc;
  NodeId a = c.add_server(Protocol::ncc, nc);
  NodeId b = c.add_server(Protocol::ncc, nc);
  NodeId n1 = 0;
  NodeId n2 = 0;
  NodeId n3 = 0;
  auto& cl1 = c.add_client(Protocol::ncc, 1, n1, 8);
  auto& cl2 = c.add_client(Protocol::ncc, 2, n2, 8);
  auto& cl3 = c.add_client(Protocol::ncc, 3, n3, 8);
  Rng r = Rng::derive(seed, 77);
  c.sim.set_link_delay(n3, a, r.uniform_int(1, 10));
  c.sim.set_link_delay(n3, b, r.uniform_int(20, 150));
  c.sim.set_link_delay(n1, a, r.uniform_int(1, 10));
  c.sim.set_link_delay(n2, b, r.uniform_int(1, 10));
  c.sim.set_clock_offset(n2, -r.uniform_int(0, 60));
  const auto t3 = r.uniform_int(10, 30);
  const auto t1 = t3 + r.uniform_int(0, 30);
  const auto gap = r.uniform_int(1, 30);
  c.sim.at(t3, [&] { cl3.submit(program({wr(a, 31), wr(b, 32)})); });
  c.sim.at(t1, [&] {
    cl1.submit(program({rd(a)}), [&](const TxOutcome&) {
      c.sim.at(c.sim.now() + gap, [&] { cl2.submit(program({rd(b)})); });
    });
  });
  c.sim.run();
  finish(res, c.sim);
  res.ok = res.check.verdict == Verdict::ok;
  res.lines.push_back(std::string("rtc ") + (rtc ? "on" : "off") + ", seed " + std::to_string(seed) + ": " +
                      res.check.describe());
  return res;
}

ScenarioResult stale_read(Protocol p) {
  ScenarioResult res;
  res.name = "stale-read";
  Cluster c(quiet_sim());
  NodeId s = c.add_server(p);
  NodeId n1 = 0;
  NodeId n2 = 0;
  auto& lead = c.add_client(p, 1, n1);
  auto& lag = c.add_client(p, 2, n2);
  c.sim.set_clock_offset(n1, 100);
  c.sim.set_clock_offset(n2, -100);
  TxOutcome w;
  TxOutcome rd_out;
  c.sim.at(1000, [&] {
    lead.submit(program({wr(s, 5)}), [&](const TxOutcome& o) {
      w = o;
      c.sim.at(c.sim.now() + 10, [&] { lag.submit(program({rd(s)}, true), [&](const TxOutcome& r) { rd_out = r; }); });
    });
  });
  c.sim.run();
  finish(res, c.sim);
  std::string name(to_string(p));
  res.lines.push_back(name + ": writer " + outcome_str(w));
  if (rd_out.committed && !rd_out.results.empty()) {
    const auto& v = rd_out.results.front().version;
    res.lines.push_back(name + ": later reader " + outcome_str(rd_out) + ", read version " +
                        (v == kInitTx ? std::string("initial") : v.str()));
  }
  res.lines.push_back(name + ": " + res.check.describe());
  res.ok = res.check.verdict == Verdict::ok;
  return res;
}

ScenarioResult failure_recovery(std::int64_t timeout) {
  ScenarioResult res;
  res.name = "failure-recovery";
  SimConfig sc = quiet_sim();
  const std::int64_t crash = 600;
  sc.failures.push_back({2, crash, FailureMode::drop_commits});
  Cluster c(sc);
  NccServerConfig nc;
  nc.recovery_timeout = timeout;
  NodeId a = c.add_server(Protocol::ncc, nc);
  NodeId b = c.add_server(Protocol::ncc, nc);
  NodeId n1 = 0;
  NodeId n2 = 0;
  auto& crashed = c.add_client(Protocol::ncc, 1, n1);
  auto& other = c.add_client(Protocol::ncc, 2, n2);
  TxOutcome o1;
  TxOutcome o2;
  std::int64_t issued = 2000;
  std::int64_t done = -1;
  c.sim.at(590, [&] { crashed.submit(program({wr(a, 41), wr(b, 42)}), [&](const TxOutcome& o) { o1 = o; }); });
  c.sim.at(issued, [&] {
    other.submit(program({rd(a), wr(b, 52)}), [&](const TxOutcome& o) {
      o2 = o;
      done = c.sim.now();
    });
  });
  c.sim.run();
  finish(res, c.sim);
  std::int64_t backup_at = -1;
  for (const auto& r : res.trace) {
    if (r.kind == TraceKind::commit && r.tx == o1.tx && r.aux >= kBackupCommitFlag) backup_at = r.time;
  }
  res.lines.push_back("client 1 stops sending commit messages at " + std::to_string(crash));
  res.lines.push_back("tx1 " + o1.tx.str() + " returned to client 1: " + outcome_str(o1));
  res.lines.push_back(backup_at >= 0 ? "backup coordinator committed tx1 at " + std::to_string(backup_at)
                                     : std::string("backup coordinator did not commit tx1"));
  bool read_tx1 = o2.committed && !o2.results.empty() && o2.results[0].version == o1.tx;
  res.lines.push_back("tx2 issued at " + std::to_string(issued) + ": " + outcome_str(o2) +
                      (read_tx1 ? ", read tx1's write" : "") + ", completed at " + std::to_string(done));
  res.lines.push_back(res.check.describe());
  res.ok = o1.committed && backup_at >= 0 && read_tx1 && done - issued >= timeout / 2 &&
           done - issued <= 2 * timeout && res.check.verdict == Verdict::ok;
  return res;
}

std::vector<std::string_view> scenario_names() {
  return {"fig4a", "fig4b-smart-retry", "rtc-inversion", "mvto-stale-read", "failure-recovery"};
}

std::optional<ScenarioResult> run_scenario(std::string_view name, std::uint64_t seed) {
  if (name == "fig4a") {
    auto res = fig4a(true);
    auto naive = fig4a(false);
    for (auto& l : naive.lines) res.lines.push_back(l);
    return res;
  }
  if (name == "fig4b-smart-retry") return fig4b_smart_retry();
  if (name == "rtc-inversion") {
    ScenarioResult res;
    res.name = std::string(name);
    constexpr std::uint64_t kSeeds = 1000;
    std::uint64_t off = 0;
    std::uint64_t on = 0;
    for (std::uint64_t s = seed; s < seed + kSeeds; ++s) {
      auto r = rtc_inversion(s, false);
      if (!r.check.real_time) {
        if (off++ == 0) {
          res.lines.push_back(r.lines.front());
          res.trace = std::move(r.trace);
          res.check = r.check;
        }
      }
      if (rtc_inversion(s, true).check.verdict != Verdict::ok) ++on;
    }
    res.lines.push_back("rtc off: inversions on " + std::to_string(off) + " of " + std::to_string(kSeeds) + " seeds");
    res.lines.push_back("rtc on: violations on " + std::to_string(on) + " of " + std::to_string(kSeeds) + " seeds");
    res.ok = off > 0 && on == 0;
    return res;
  }
  if (name == "mvto-stale-read") {
    auto res = stale_read(Protocol::mvto);
    auto ncc_run = stale_read(Protocol::ncc);
    res.name = std::string(name);
    for (auto& l : ncc_run.lines) res.lines.push_back(l);
    res.ok = !res.check.real_time && ncc_run.check.verdict == Verdict::ok;
    return res;
  }
  if (name == "failure-recovery") return failure_recovery();
  return std::nullopt;
}

}  // namespace ncc
