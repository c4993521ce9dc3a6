#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncc/bench.hpp"
#include "ncc/checker.hpp"
#include "ncc/config.hpp"
#include "ncc/scenarios.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kViolation = 2;
constexpr int kMalformed = 3;
constexpr int kUsage = 64;

struct UsageError {
  std::string what;
};

struct RunOptions {
  std::string config;
  std::string protocol;
  std::string workload;
  std::uint64_t seed = 0;
  std::string duration;
  double rate = 0;
  std::uint32_t clients = 0;
  std::uint32_t servers = 0;
  double write_percent = -1;
  bool no_rtc = false;
  bool full_trace = false;
};

ncc::BenchConfig build_config(const RunOptions& o) {
  ncc::BenchConfig c;
  if (!o.config.empty()) {
    auto loaded = ncc::load_config(o.config);
    if (!loaded.config) throw UsageError{loaded.error};
    c = *loaded.config;
  }
  if (!o.protocol.empty()) {
    auto p = ncc::protocol_from(o.protocol);
    if (!p) throw UsageError{"unknown protocol " + o.protocol};
    c.protocol = *p;
  }
  if (!o.workload.empty()) {
    auto w = ncc::workload_kind_from(o.workload);
    if (!w) throw UsageError{"unknown workload " + o.workload};
    c.workload = ncc::default_spec(*w);
  }
  if (o.seed != 0) c.seed = o.seed;
  if (!o.duration.empty()) {
    auto d = ncc::parse_duration(o.duration);
    if (!d) throw UsageError{"bad duration " + o.duration};
    c.duration = *d;
  }
  if (o.rate > 0) c.rate = o.rate;
  if (o.clients > 0) c.clients = o.clients;
  if (o.servers > 0) c.servers = o.servers;
  if (o.write_percent >= 0) c.workload.write_fraction = o.write_percent / 100.0;
  if (o.no_rtc) c.ncc.rtc = false;
  if (o.full_trace) c.trace_level = ncc::TraceLevel::full;
  if (auto e = c.workload.validate(); !e.empty()) throw UsageError{e};
  return c;
}

void add_run_options(CLI::App* cmd, RunOptions& o, bool write_fraction = true) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--protocol", o.protocol, "ncc, ncc-rw, docc, d2pl-nw, d2pl-ww or mvto");
  cmd->add_option("--workload", o.workload, "google-f1, facebook-tao, tpcc-lite or google-wf");
  cmd->add_option("--seed", o.seed, "simulation seed");
  cmd->add_option("--duration", o.duration, "arrival window, e.g. 10s or 500ms");
  cmd->add_option("--rate", o.rate, "arrivals per client per second");
  cmd->add_option("--clients", o.clients, "client count");
  cmd->add_option("--servers", o.servers, "server count");
  if (write_fraction) cmd->add_option("--write-fraction", o.write_percent, "percent of read-write transactions");
  cmd->add_flag("--no-rtc", o.no_rtc, "disable response timing control");
  cmd->add_flag("--full-trace", o.full_trace, "record sends, executions and releases too");
}

int exit_for(ncc::Verdict v) {
  switch (v) {
    case ncc::Verdict::ok: return kOk;
    case ncc::Verdict::violation: return kViolation;
    case ncc::Verdict::malformed: return kMalformed;
  }
  return kFailed;
}

int cmd_run(const RunOptions& o, const std::string& out, const std::string& trace_out, bool check) {
  auto cfg = build_config(o);
  auto res = ncc::run_benchmark(cfg);
  auto json = res.report.to_json();
  if (out.empty()) {
    std::cout << json << "\n";
  } else {
    std::ofstream f(out);
    f << json << "\n";
    std::cerr << "metrics written to " << out << "\n";
  }
  if (!trace_out.empty()) {
    std::ofstream f(trace_out);
    ncc::write_trace(f, res.trace);
    std::cerr << res.trace.size() << " trace records written to " << trace_out << "\n";
  }
  if (res.status != ncc::RunStatus::quiescent) std::cerr << "warning: run did not drain\n";
  if (!check) return kOk;
  auto verdict = ncc::check_trace(res.trace);
  std::cerr << verdict.describe() << "\n";
  return exit_for(verdict.verdict);
}

int cmd_check(const std::string& path, bool oracle, const std::string& witness) {
  std::ifstream in(path);
  if (!in) throw UsageError{"cannot open " + path};
  auto read = ncc::read_trace(in);
  ncc::CheckResult res;
  if (read.bad_line != 0) {
    res.verdict = ncc::Verdict::malformed;
    res.error = "unparsable line " + std::to_string(read.bad_line);
  } else {
    ncc::CheckOptions opt;
    opt.oracle = oracle;
    res = ncc::check_trace(read.records, opt);
  }
  std::cout << res.describe() << "\n";
  if (!witness.empty() && res.verdict == ncc::Verdict::violation) {
    nlohmann::ordered_json j;
    auto ids = [](const std::vector<ncc::TxId>& v) {
      std::vector<std::string> out;
      for (const auto& t : v) out.push_back(t.str());
      return out;
    };
    j["cycle"] = ids(res.cycle);
    j["inversion"] = ids(res.inversion);
    std::ofstream(witness) << j.dump(2) << "\n";
  }
  return exit_for(res.verdict);
}

std::vector<double> parse_fractions(const std::string& spec, int steps) {
  auto colon = spec.find(':');
  auto num = [](const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw UsageError{"bad number " + s};
    return v / 100.0;  // given in percent
  };
  try {
    if (colon == std::string::npos) return {num(spec)};
    double lo = num(spec.substr(0, colon));
    double hi = num(spec.substr(colon + 1));
    if (lo <= 0 || hi < lo || steps < 1) throw UsageError{"bad write-fraction range " + spec};
    std::vector<double> out;
    for (int i = 0; i < steps; ++i) {
      double t = steps == 1 ? 0 : static_cast<double>(i) / (steps - 1);
      out.push_back(lo * std::pow(hi / lo, t));
    }
    return out;
  } catch (const std::invalid_argument&) {
    throw UsageError{"bad write-fraction range " + spec};
  }
}

std::pair<std::uint64_t, std::uint64_t> parse_seeds(const std::string& spec) {
  auto colon = spec.find(':');
  try {
    if (colon == std::string::npos) return {1, std::stoull(spec)};
    return {std::stoull(spec.substr(0, colon)), std::stoull(spec.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError{"bad seed range " + spec};
  }
}

struct SweepRow {
  std::string protocol;
  double write_fraction = 0;
  std::uint64_t seed = 0;
  ncc::MetricsReport report;
  std::string verdict;
};

int cmd_sweep(RunOptions base, const std::string& protocols, const std::string& fractions, int steps,
              const std::string& seeds, const std::string& out, bool check, unsigned jobs) {
  std::vector<ncc::Protocol> protos;
  std::stringstream ss(protocols);
  for (std::string p; std::getline(ss, p, ',');) {
    auto proto = ncc::protocol_from(p);
    if (!proto) throw UsageError{"unknown protocol " + p};
    protos.push_back(*proto);
  }
  if (protos.empty()) throw UsageError{"no protocols"};
  if (base.workload.empty() && base.config.empty()) base.workload = "google-wf";
  base.protocol.clear();
  auto cfg = build_config(base);
  std::vector<double> wfs = fractions.empty() ? std::vector<double>{cfg.workload.write_fraction}
                                              : parse_fractions(fractions, steps);
  auto [s0, s1] = parse_seeds(seeds);
  if (s1 < s0) throw UsageError{"empty seed range"};

  std::vector<SweepRow> rows;
  for (double wf : wfs) {
    for (auto seed = s0; seed <= s1; ++seed) {
      for (auto p : protos) rows.push_back({std::string(ncc::to_string(p)), wf, seed, {}, ""});
    }
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto c = cfg;
      c.protocol = *ncc::protocol_from(rows[i].protocol);
      c.workload.write_fraction = rows[i].write_fraction;
      c.seed = rows[i].seed;
      auto res = ncc::run_benchmark(c);
      rows[i].report = res.report;
      if (check) {
        auto v = ncc::check_trace(res.trace).verdict;
        rows[i].verdict = v == ncc::Verdict::ok ? "ok" : v == ncc::Verdict::violation ? "violation" : "malformed";
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::max(1u, jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream file;
  if (!out.empty()) file.open(out);
  std::ostream& os = out.empty() ? std::cout : file;
  os << "protocol,workload,write_fraction,seed,attempts,committed,commit_rate,normalized_commit_rate,"
        "first_pass_frac,smart_retry_frac,aborted_frac,ro_abort_rate,throughput,latency_p50,latency_p99,"
        "messages,check\n";
  bool violation = false;
  for (const auto& r : rows) {
    double best = 0;
    for (const auto& o : rows) {
      if (o.seed == r.seed && o.write_fraction == r.write_fraction) best = std::max(best, o.report.commit_rate);
    }
    const auto& m = r.report;
    os << r.protocol << ',' << m.workload << ',' << r.write_fraction << ',' << r.seed << ',' << m.attempts << ','
       << m.committed << ',' << m.commit_rate << ',' << (best > 0 ? m.commit_rate / best : 0) << ','
       << m.first_pass_frac << ',' << m.smart_retry_frac << ',' << m.aborted_frac << ',' << m.ro_abort_rate << ','
       << m.throughput << ',' << m.latency_p50 << ',' << m.latency_p99 << ',' << m.messages << ','
       << (check ? r.verdict : "-") << '\n';
    violation = violation || (check && r.verdict != "ok");
  }
  return violation ? kViolation : kOk;
}

int cmd_scenario(const std::string& name, std::uint64_t seed, const std::string& trace_out) {
  auto res = ncc::run_scenario(name, seed);
  if (!res) {
    std::string names;
    for (auto n : ncc::scenario_names()) names += " " + std::string(n);
    throw UsageError{"unknown scenario " + name + "; known:" + names};
  }
  for (const auto& l : res->lines) std::cout << l << "\n";
  if (!trace_out.empty()) {
    std::ofstream f(trace_out);
    ncc::write_trace(f, res->trace);
  }
  return res->ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NCC concurrency control simulator"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::string run_out;
  std::string run_trace;
  bool run_check = false;
  auto* run = app.add_subcommand("run", "run one simulated benchmark");
  add_run_options(run, run_opts);
  run->add_option("--out", run_out, "metrics JSON output");
  run->add_option("--trace", run_trace, "trace output, one JSON record per line");
  run->add_flag("--check", run_check, "check the trace for strict serializability");

  std::string check_path;
  bool check_oracle = false;
  std::string witness;
  auto* check = app.add_subcommand("check", "check a trace for strict serializability");
  check->add_option("trace", check_path, "trace file")->required();
  check->add_flag("--oracle", check_oracle, "also run the brute-force search on small histories");
  check->add_option("--emit-witness", witness, "write the violation witness as JSON");

  RunOptions sweep_opts;
  std::string sweep_protocols = "ncc,ncc-rw,docc,d2pl-nw";
  std::string sweep_fractions;
  int sweep_steps = 5;
  std::string sweep_seeds = "1:3";
  std::string sweep_out;
  bool sweep_check = false;
  unsigned sweep_jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run a grid of protocols, write fractions and seeds; CSV out");
  add_run_options(sweep, sweep_opts, false);
  sweep->add_option("--protocols", sweep_protocols, "comma separated");
  sweep->add_option("--write-fraction", sweep_fractions, "percent, single value or lo:hi");
  sweep->add_option("--steps", sweep_steps, "log-spaced points in a write-fraction range");
  sweep->add_option("--seeds", sweep_seeds, "N or first:last");
  sweep->add_option("--out", sweep_out, "CSV output");
  sweep->add_flag("--check", sweep_check, "check every trace");
  sweep->add_option("--jobs", sweep_jobs, "parallel simulations");

  std::string scenario_name;
  std::uint64_t scenario_seed = 1;
  std::string scenario_trace;
  auto* scenario = app.add_subcommand("scenario", "replay a scripted interleaving");
  scenario->add_option("name", scenario_name, "fig4a, fig4b-smart-retry, rtc-inversion, mvto-stale-read, failure-recovery")
      ->required();
  scenario->add_option("--seed", scenario_seed, "first seed");
  scenario->add_option("--trace", scenario_trace, "trace output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  try {
    if (run->parsed()) return cmd_run(run_opts, run_out, run_trace, run_check);
    if (check->parsed()) return cmd_check(check_path, check_oracle, witness);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_opts, sweep_protocols, sweep_fractions, sweep_steps, sweep_seeds, sweep_out,
                       sweep_check, sweep_jobs);
    }
    if (scenario->parsed()) return cmd_scenario(scenario_name, scenario_seed, scenario_trace);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what << "\n";
    return kUsage;
  }
  return kUsage;
}
