#include <benchmark/benchmark.h>

#include "ncc/bench.hpp"
#include "ncc/checker.hpp"
#include "ncc/ncc_server.hpp"
#include "ncc/workload.hpp"

namespace ncc {
namespace {

void BM_ZipfSample(benchmark::State& state) {
  Zipf z(1'000'000, 0.8);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(z.sample(rng));
}
BENCHMARK(BM_ZipfSample);

void BM_WorkloadNext(benchmark::State& state) {
  Workload w(default_spec(static_cast<WorkloadKind>(state.range(0))), 4);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(w.next(rng));
}
BENCHMARK(BM_WorkloadNext)->DenseRange(0, 3);

// Null context so the server can run outside a simulation.
class Sink : public Context {
 public:
  NodeId self() const override { return 0; }
  std::int64_t now() const override { return now_; }
  std::int64_t global_now() const override { return now_; }
  void send(Message) override {}
  void set_timer(std::int64_t, std::uint64_t, bool) override {}
  Trace& trace() override { return trace_; }
  std::int64_t now_ = 0;

 private:
  Trace trace_{TraceLevel::history};
};

void BM_NccExecuteCommit(benchmark::State& state) {
  Sink ctx;
  NccServer s;
  s.bind(&ctx);
  std::int64_t t = 1;
  const Key keys = static_cast<Key>(state.range(0));
  for (auto _ : state) {
    Message m;
    m.kind = MsgKind::ExecuteReq;
    m.from = 1;
    m.tx = m.ts = {t, 1};
    m.round = 1;
    m.last_shot = true;
    m.ops = {{static_cast<Key>(t) % keys, OpKind::read, {}, {}},
             {static_cast<Key>(t + 1) % keys, OpKind::write, {static_cast<std::uint64_t>(t), 8}, {}}};
    s.on_message(m);
    Message d;
    d.kind = MsgKind::CommitAbort;
    d.from = 1;
    d.tx = m.tx;
    d.decision = Decision::committed;
    s.on_message(d);
    ctx.now_ = ++t;
  }
}
BENCHMARK(BM_NccExecuteCommit)->Arg(16)->Arg(100'000);

void BM_CheckRandomHistory(benchmark::State& state) {
  Rng rng(3);
  auto recs = random_history(rng, 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(check_trace(recs));
}
BENCHMARK(BM_CheckRandomHistory);

void BM_CheckSimTrace(benchmark::State& state) {
  BenchConfig c;
  c.workload = default_spec(WorkloadKind::google_f1);
  c.duration = 50'000;
  auto r = run_benchmark(c);
  for (auto _ : state) benchmark::DoNotOptimize(check_trace(r.trace));
  state.counters["records"] = static_cast<double>(r.trace.size());
}
BENCHMARK(BM_CheckSimTrace)->Unit(benchmark::kMillisecond);

void BM_SimRun(benchmark::State& state) {
  BenchConfig c;
  c.protocol = static_cast<Protocol>(state.range(0));
  c.workload = default_spec(WorkloadKind::google_f1);
  c.duration = 20'000;
  for (auto _ : state) benchmark::DoNotOptimize(run_benchmark(c).report);
}
BENCHMARK(BM_SimRun)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ncc

BENCHMARK_MAIN();
