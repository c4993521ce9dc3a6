// End-to-end acceptance run. Prints one PASS or FAIL line per criterion and
// exits non-zero if any fails.
//
//   ncc_acceptance [--seeds N] [--only 1,4,9]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ncc/bench.hpp"
#include "ncc/checker.hpp"
#include "ncc/scenarios.hpp"
#include "ncc/trace.hpp"

namespace {

using namespace ncc;

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// About 10.5k arrivals with the default 16 clients at 2000/s each.
constexpr std::int64_t kWindow = 330'000;

BenchConfig base(Protocol p, WorkloadKind w, std::uint64_t seed) {
  BenchConfig c;
  c.protocol = p;
  c.workload = default_spec(w);
  c.seed = seed;
  c.duration = kWindow;
  return c;
}

// Totals kept from the ncc google-f1 runs of the sweep.
struct F1Totals {
  std::uint64_t attempts = 0, clean = 0, rescued = 0, rejected = 0, aborted = 0, runs = 0;
};

void criterion1(std::uint64_t seeds, F1Totals& f1) {
  const Protocol protos[] = {Protocol::ncc, Protocol::ncc_rw, Protocol::docc, Protocol::d2pl_nw, Protocol::d2pl_ww};
  const WorkloadKind loads[] = {WorkloadKind::google_f1, WorkloadKind::facebook_tao, WorkloadKind::tpcc_lite};
  std::size_t runs = 0, bad = 0, small = 0, undrained = 0;
  std::uint64_t min_txs = UINT64_MAX;
  std::string first_bad;
  for (auto w : loads) {
    for (auto p : protos) {
      for (std::uint64_t s = 1; s <= seeds; ++s) {
        auto res = run_benchmark(base(p, w, s));
        auto chk = check_trace(res.trace);
        const auto& r = res.report;
        auto txs = r.committed + r.given_up;
        min_txs = std::min(min_txs, txs);
        ++runs;
        small += txs < 10'000;
        undrained += res.status != RunStatus::quiescent;
        if (chk.verdict != Verdict::ok) {
          ++bad;
          if (first_bad.empty()) {
            first_bad = fmt("%s/%s seed %llu: %s", std::string(to_string(p)).c_str(), std::string(to_string(w)).c_str(),
                            static_cast<unsigned long long>(s), chk.describe().c_str());
          }
        }
        if (p == Protocol::ncc && w == WorkloadKind::google_f1) {
          f1.attempts += r.attempts;
          f1.clean += r.first_pass - r.first_pass_delayed;
          f1.rescued += r.retry_committed;
          f1.rejected += r.retry_committed + r.retry_aborted;
          f1.aborted += r.attempts - r.committed;
          ++f1.runs;
        }
      }
      std::fprintf(stderr, "  [1] %s on %s done (%zu runs so far)\n", std::string(to_string(p)).c_str(),
                   std::string(to_string(w)).c_str(), runs);
    }
  }
  auto detail = fmt("%zu runs, %zu with checker findings, smallest run %llu txs, %zu below 10^4, %zu undrained", runs,
                    bad, static_cast<unsigned long long>(min_txs), small, undrained);
  if (!first_bad.empty()) detail += "; first: " + first_bad;
  report(1, bad == 0 && small == 0 && runs > 0, detail);
}

void criterion2() {
  auto m = stale_read(Protocol::mvto);
  auto n = stale_read(Protocol::ncc);
  bool ok = m.check.verdict == Verdict::violation && !m.check.real_time && n.check.verdict == Verdict::ok;
  report(2, ok, "mvto: " + m.check.describe() + "; ncc: " + n.check.describe());
}

void criterion3() {
  int off = 0, on = 0, first_off = 0;
  for (std::uint64_t s = 1; s <= 1000; ++s) {
    if (rtc_inversion(s, false).check.verdict == Verdict::violation) {
      if (off++ == 0) first_off = static_cast<int>(s);
    }
    on += rtc_inversion(s, true).check.verdict != Verdict::ok;
  }
  report(3, off > 0 && on == 0,
         fmt("rtc off: inversions on %d of 1000 seeds (first seed %d); rtc on: %d of 1000 seeds flagged", off, first_off,
             on));
}

// Rounds per committed transaction, counted from the client's sends in a full trace.
struct RoundCount {
  std::map<std::string, std::map<int, std::size_t>> hist;  // class -> rounds -> count
  std::size_t mismatched_aux = 0;
  std::size_t skipped_retry = 0;
};

void count_rounds(const BenchResult& res, NodeId servers, bool ncc, RoundCount& out) {
  std::unordered_map<TxId, std::set<std::uint64_t>, TimestampHash> rounds;
  std::unordered_map<TxId, bool, TimestampHash> writes, retried, commit_sent;
  std::vector<std::pair<TxId, std::uint64_t>> commits;
  for (const auto& r : res.trace) {
    switch (r.kind) {
      case TraceKind::send:
        if (r.node >= servers) {
          rounds[r.tx].insert(r.aux >> 8);
          if ((r.aux & 0xff) == static_cast<std::uint64_t>(MsgKind::CommitAbort)) commit_sent[r.tx] = true;
        }
        break;
      case TraceKind::write:
        writes[r.tx] = true;
        break;
      case TraceKind::smart_retry:
        retried[r.tx] = true;
        break;
      case TraceKind::commit:
        if (r.aux < kBackupCommitFlag) commits.emplace_back(r.tx, r.aux);
        break;
      default:
        break;
    }
  }
  for (const auto& [tx, aux] : commits) {
    if (ncc && retried.count(tx)) {
      ++out.skipped_retry;
      continue;
    }
    auto n = static_cast<int>(rounds[tx].size());
    out.mismatched_aux += static_cast<std::uint64_t>(n) != aux;
    // Read-only transactions that fell back to the read-write path after
    // repeated read-only aborts are counted on their own.
    const char* cls = writes.count(tx) ? "rw" : ncc && commit_sent.count(tx) ? "ro-as-rw" : "ro";
    out.hist[cls][n]++;
  }
}

void criterion4() {
  struct Want {
    Protocol p;
    int ro, rw;
  };
  const Want wants[] = {{Protocol::ncc, 1, 2}, {Protocol::docc, 3, 3}, {Protocol::d2pl_nw, 2, 2}, {Protocol::d2pl_ww, 3, 3}};
  bool ok = true;
  std::string detail;
  for (const auto& w : wants) {
    RoundCount rc;
    for (std::uint64_t s = 1; s <= 3; ++s) {
      auto c = base(w.p, WorkloadKind::google_f1, s);
      c.workload.write_fraction = 0.05;  // enough read-write transactions to count
      c.trace_level = TraceLevel::full;
      count_rounds(run_benchmark(c), static_cast<NodeId>(c.servers), w.p == Protocol::ncc, rc);
    }
    bool this_ok = rc.mismatched_aux == 0;
    std::string h;
    for (const auto& [cls, m] : rc.hist) {
      int want = cls == "ro" ? w.ro : w.rw;  // ro-as-rw takes the read-write path
      h += " " + cls + "{";
      for (const auto& [n, cnt] : m) {
        h += fmt("%d:%zu ", n, cnt);
        this_ok &= n == want;
      }
      h.back() = '}';
    }
    this_ok &= rc.hist.count("rw") && rc.hist.count("ro");
    ok &= this_ok;
    if (!detail.empty()) detail += "; ";
    detail += std::string(to_string(w.p)) + h;
    if (w.p == Protocol::ncc) detail += fmt(" (%zu smart-retried excluded)", rc.skipped_retry);
    if (rc.mismatched_aux) detail += fmt(" [%zu disagree with client count]", rc.mismatched_aux);
  }
  report(4, ok, "rounds:count per class; " + detail);
}

void criterion5(const F1Totals& t) {
  if (t.runs == 0 || t.attempts == 0) {
    report(5, false, "no google-f1 ncc runs recorded");
    return;
  }
  double clean = static_cast<double>(t.clean) / static_cast<double>(t.attempts);
  double aborted = static_cast<double>(t.aborted) / static_cast<double>(t.attempts);
  bool rescue_ok = t.rejected > 0 && 2 * t.rescued >= t.rejected;
  std::string rescue = t.rejected == 0
                           ? "no safeguard rejects observed, rescue fraction undefined"
                           : fmt("smart retry rescued %llu of %llu safeguard rejects (%.1f%%)",
                                 static_cast<unsigned long long>(t.rescued), static_cast<unsigned long long>(t.rejected),
                                 100.0 * static_cast<double>(t.rescued) / static_cast<double>(t.rejected));
  report(5, clean >= 0.95 && aborted <= 0.01 && rescue_ok,
         fmt("over %llu runs, %llu attempts: first pass without delay %.3f%%, aborted %.3f%%; ",
             static_cast<unsigned long long>(t.runs), static_cast<unsigned long long>(t.attempts), 100 * clean,
             100 * aborted) +
             rescue);
}

bool mentions(const ScenarioResult& r, const std::string& s) {
  return std::any_of(r.lines.begin(), r.lines.end(), [&](const std::string& l) { return l.find(s) != std::string::npos; });
}

void criterion6() {
  auto a = fig4a(true);
  auto b = fig4b_smart_retry();
  bool a_ok = a.ok && mentions(a, "tx1 sent at 1004, pre-assigned 1014.1, committed at 1014.1 after 1 attempt") &&
              mentions(a, "tx2 sent at 1005, pre-assigned 1010.2, committed at 1010.2 after 1 attempt");
  bool b_ok = b.ok && mentions(b, "read A0 (0,4), write B1 (6,6)") && mentions(b, "safeguard rejected, t'=6") &&
              mentions(b, "committed at t'=6");
  report(6, a_ok && b_ok,
         std::string("fig4a ") + (a_ok ? "(1014,c1)/(1010,c2) both commit" : "mismatch") + "; fig4b " +
             (b_ok ? "rejects {(0,4),(6,6)}, smart retry commits at t'=6" : "mismatch"));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rank = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2) + 1;
      i = j + 1;
    }
    return r;
  };
  auto rx = rank(x), ry = rank(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void criterion7() {
  int wins = 0, seeds = 20;
  double sum_rw = 0, sum_docc = 0, sum_nw = 0;
  std::string losses;
  for (std::uint64_t s = 1; s <= static_cast<std::uint64_t>(seeds); ++s) {
    auto rate = [&](Protocol p) {
      auto c = base(p, WorkloadKind::google_wf, s);
      c.workload.write_fraction = 0.30;
      return run_benchmark(c).report.commit_rate;
    };
    double rw = rate(Protocol::ncc_rw), docc = rate(Protocol::docc), nw = rate(Protocol::d2pl_nw);
    sum_rw += rw;
    sum_docc += docc;
    sum_nw += nw;
    if (rw > docc && rw > nw) {
      ++wins;
    } else {
      losses += fmt(" seed %llu (%.3f/%.3f/%.3f)", static_cast<unsigned long long>(s), rw, docc, nw);
    }
  }
  const std::vector<double> fractions{0.003, 0.006, 0.012, 0.025, 0.05, 0.1, 0.2, 0.3};
  std::vector<double> ro;
  std::string curve;
  for (double wf : fractions) {
    double sum = 0;
    for (std::uint64_t s = 1; s <= 3; ++s) {
      auto c = base(Protocol::ncc, WorkloadKind::google_wf, s);
      c.workload.write_fraction = wf;
      sum += run_benchmark(c).report.ro_abort_rate;
    }
    ro.push_back(sum / 3);
    curve += fmt(" %.3g:%.4f", wf, sum / 3);
  }
  double rho = spearman(fractions, ro);
  auto d = fmt("ncc-rw beats docc and d2pl-nw on %d of %d seeds (mean commit %.3f vs %.3f, %.3f)", wins, seeds,
               sum_rw / seeds, sum_docc / seeds, sum_nw / seeds);
  if (!losses.empty()) d += "; lost on" + losses;
  d += fmt("; ncc read-only abort rate vs write fraction rho=%.3f:", rho) + curve;
  report(7, wins == seeds && rho > 0.9, d);
}

Decision decision_of(std::uint64_t aux) { return static_cast<Decision>(aux); }

// Picks a crash instant in [from, from + span) with the most transactions
// that have executed everywhere but whose client has not yet sent commits.
std::int64_t busiest_instant(const BenchResult& r, NodeId servers, std::int64_t from, std::int64_t span) {
  std::unordered_map<TxId, std::pair<std::int64_t, std::int64_t>, TimestampHash> life;
  for (const auto& t : r.trace) {
    if (t.kind == TraceKind::execute) {
      auto& l = life.try_emplace(t.tx, INT64_MIN, INT64_MAX).first->second;
      l.first = std::max(l.first, t.time);
    } else if (t.kind == TraceKind::send && t.node >= servers &&
               static_cast<MsgKind>(t.aux & 0xff) == MsgKind::CommitAbort) {
      auto& l = life.try_emplace(t.tx, INT64_MIN, INT64_MAX).first->second;
      l.second = std::min(l.second, t.time);
    }
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> open;
  for (const auto& [tx, l] : life) {
    if (l.first != INT64_MIN && l.second != INT64_MAX && l.second >= from && l.first < from + span) open.push_back(l);
  }
  std::int64_t best = from;
  std::size_t most = 0;
  for (const auto& cand : open) {
    auto t = std::max(cand.first + 1, from);
    auto n = static_cast<std::size_t>(
        std::count_if(open.begin(), open.end(), [&](const auto& l) { return l.first < t && t <= l.second; }));
    if (n > most) {
      most = n;
      best = t;
    }
  }
  return best;
}

struct RecoveryTally {
  std::size_t seeds = 0, compared = 0, differ = 0, undecided = 0, recovered = 0, backup = 0, unclean = 0, slow = 0;
  double worst_gap = 0;  // largest relative throughput change at 2T
  std::string first_problem;
};

void recovery_run(std::uint64_t seed, RecoveryTally& t) {
  constexpr std::int64_t T = 1'000'000;
  constexpr std::int64_t window = 250'000;
  BenchConfig c = base(Protocol::ncc, WorkloadKind::google_f1, seed);
  c.workload.write_fraction = 0.3;
  c.rate = 1000;
  c.duration = 3'500'000;
  c.ncc.recovery_timeout = T;
  c.trace_level = TraceLevel::full;
  auto clean = run_benchmark(c);
  const std::int64_t crash = busiest_instant(clean, static_cast<NodeId>(c.servers), 1'000'000, 10'000);
  c.crash_at = crash;
  c.crash_mode = FailureMode::drop_commits;
  auto failed = run_benchmark(c);

  // Transactions whose execution finished on every server before the crash.
  struct Info {
    std::int64_t begin = INT64_MAX;
    std::int64_t last_exec = INT64_MIN;
    std::vector<Decision> decides;
  };
  auto collect = [](const BenchResult& r) {
    std::unordered_map<TxId, Info, TimestampHash> m;
    for (const auto& x : r.trace) {
      if (x.kind == TraceKind::tx_begin) m[x.tx].begin = std::min(m[x.tx].begin, x.time);
      if (x.kind == TraceKind::execute) m[x.tx].last_exec = std::max(m[x.tx].last_exec, x.time);
      if (x.kind == TraceKind::decide) m[x.tx].decides.push_back(decision_of(x.aux));
    }
    return m;
  };
  auto before = collect(clean);
  auto after = collect(failed);
  std::set<TxId> by_backup;
  for (const auto& r : failed.trace) {
    if ((r.kind == TraceKind::commit || r.kind == TraceKind::abort) && r.aux >= kBackupCommitFlag &&
        r.node < c.servers) {
      ++t.backup;
      by_backup.insert(r.tx);
    }
  }
  for (const auto& [tx, info] : before) {
    if (info.begin >= crash || info.last_exec == INT64_MIN || info.last_exec >= crash || info.decides.empty()) continue;
    ++t.compared;
    t.recovered += by_backup.count(tx);
    auto it = after.find(tx);
    if (it == after.end() || it->second.decides.size() < info.decides.size()) {
      ++t.undecided;
      continue;
    }
    for (auto d : it->second.decides) t.differ += d != info.decides.front();
  }
  auto chk = check_trace(failed.trace);
  double pre = throughput(failed.metrics, crash - window, crash);
  double post = throughput(failed.metrics, crash + 2 * T - window, crash + 2 * T);
  double gap = std::abs(post - pre) / pre;
  t.worst_gap = std::max(t.worst_gap, gap);
  t.slow += gap > 0.1;
  if (chk.verdict != Verdict::ok) {
    ++t.unclean;
    if (t.first_problem.empty()) t.first_problem = fmt("seed %llu: ", static_cast<unsigned long long>(seed)) + chk.describe();
  }
  ++t.seeds;
}

void criterion8() {
  RecoveryTally t;
  for (std::uint64_t s = 1; s <= 5; ++s) recovery_run(s, t);
  bool ok = t.recovered > 0 && t.differ == 0 && t.undecided == 0 && t.unclean == 0 && t.slow == 0;
  auto d = fmt("%zu seeds: %zu transactions executed before the crash, %zu decided differently from the failure-free "
               "run, %zu left undecided, %zu of them finished by a backup coordinator (%zu backup decisions in all); "
               "%zu traces unclean; worst throughput change at 2T %.1f%%",
               t.seeds, t.compared, t.differ, t.undecided, t.recovered, t.backup, t.unclean, 100 * t.worst_gap);
  if (!t.first_problem.empty()) d += "; " + t.first_problem;
  report(8, ok, d);
}

void criterion9() {
  Rng rng(2024);
  std::size_t agree = 0, mismatch = 0, malformed = 0, violations = 0;
  for (int i = 0; i < 10'000; ++i) {
    auto recs = random_history(rng, 8, 3);
    auto res = check_trace(recs, {true, 8});
    if (res.verdict == Verdict::malformed || !res.oracle) {
      ++malformed;
      continue;
    }
    bool ok = res.verdict == Verdict::ok;
    violations += !ok;
    (*res.oracle == ok ? agree : mismatch)++;
  }
  report(9, mismatch == 0 && malformed == 0,
         fmt("%zu agree, %zu mismatches, %zu unchecked; %zu violating histories", agree, mismatch, malformed, violations));
}

void criterion10() {
  std::size_t configs = 0, same = 0;
  for (auto p : {Protocol::ncc, Protocol::ncc_rw, Protocol::docc, Protocol::d2pl_nw, Protocol::d2pl_ww, Protocol::mvto}) {
    for (auto w : {WorkloadKind::google_wf, WorkloadKind::tpcc_lite}) {
      auto c = base(p, w, 7);
      c.duration = 50'000;
      c.trace_level = TraceLevel::full;
      std::ostringstream a, b;
      write_trace(a, run_benchmark(c).trace);
      write_trace(b, run_benchmark(c).trace);
      ++configs;
      same += !a.str().empty() && a.str() == b.str();
    }
  }
  report(10, same == configs, fmt("%zu of %zu configurations gave byte-identical full traces", same, configs));
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seeds = 100;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--seeds") && i + 1 < argc) {
      seeds = std::stoull(argv[++i]);
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else {
      std::cerr << "usage: ncc_acceptance [--seeds N] [--only 1,2,...]\n";
      return 64;
    }
  }
  auto want = [&](int n) { return only.empty() || only.count(n) || (n == 5 && only.count(1)); };
  F1Totals f1;
  if (want(1) || want(5)) criterion1(seeds, f1);
  if (want(2)) criterion2();
  if (want(3)) criterion3();
  if (want(4)) criterion4();
  if (want(5)) criterion5(f1);
  if (want(6)) criterion6();
  if (want(7)) criterion7();
  if (want(8)) criterion8();
  if (want(9)) criterion9();
  if (want(10)) criterion10();
  return failures == 0 ? 0 : 1;
}
