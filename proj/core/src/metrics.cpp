#include "ncc/metrics.hpp"

#include <algorithm>

#include "json.hpp"

namespace ncc {

namespace {

std::int64_t percentile(std::vector<std::int64_t>& v, double p) {
  if (v.empty()) return 0;
  auto idx = static_cast<std::size_t>(p * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

double ratio(std::uint64_t a, std::uint64_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

MetricsReport summarize(const MetricsCollector& m, std::int64_t duration) {
  MetricsReport r;
  std::vector<std::int64_t> lat;
  std::uint64_t rounds = 0;
  for (const auto& a : m.records()) {
    ++r.attempts;
    r.ops += a.ops;
    r.delayed_ops += a.delayed_ops;
    if (a.read_only) ++r.ro_attempts;
    switch (a.outcome) {
      case Outcome::committed:
        ++r.first_pass;
        break;
      case Outcome::committed_delayed:
        ++r.first_pass;
        ++r.first_pass_delayed;
        break;
      case Outcome::committed_retry:
        ++r.retry_committed;
        break;
      case Outcome::aborted_retry:
        ++r.retry_aborted;
        break;
      case Outcome::aborted_early:
        ++r.early_aborts;
        break;
      case Outcome::aborted_ro:
        ++r.ro_aborts;
        break;
      case Outcome::aborted_conflict:
        ++r.conflict_aborts;
        break;
      case Outcome::aborted_recovery:
        ++r.recovery_aborts;
        break;
    }
    if (is_commit(a.outcome)) {
      ++r.committed;
      rounds += a.rounds;
      lat.push_back(a.end - a.begin);
    }
  }
  r.given_up = m.given_up();
  r.dropped_arrivals = m.dropped_arrivals();
  r.commit_rate = ratio(r.committed, r.attempts);
  r.first_pass_clean = ratio(r.first_pass - r.first_pass_delayed, r.attempts);
  r.first_pass_frac = ratio(r.first_pass, r.attempts);
  r.smart_retry_frac = ratio(r.retry_committed, r.attempts);
  r.aborted_frac = ratio(r.attempts - r.committed, r.attempts);
  r.smart_retry_rescue = ratio(r.retry_committed, r.retry_committed + r.retry_aborted);
  r.rtc_delayed_frac = ratio(r.delayed_ops, r.ops);
  r.ro_abort_rate = ratio(r.ro_aborts, r.ro_attempts);
  r.mean_rounds = ratio(rounds, r.committed);
  r.duration = duration;
  r.throughput = duration > 0 ? static_cast<double>(r.committed) * 1e6 / static_cast<double>(duration) : 0.0;
  r.latency_p50 = percentile(lat, 0.50);
  r.latency_p90 = percentile(lat, 0.90);
  r.latency_p99 = percentile(lat, 0.99);
  return r;
}

double throughput(const MetricsCollector& m, std::int64_t from, std::int64_t to) {
  if (to <= from) return 0.0;
  std::uint64_t n = 0;
  for (const auto& a : m.records()) {
    if (is_commit(a.outcome) && a.end >= from && a.end < to) ++n;
  }
  return static_cast<double>(n) * 1e6 / static_cast<double>(to - from);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["protocol"] = protocol;
  j["workload"] = workload;
  j["seed"] = seed;
  j["attempts"] = attempts;
  j["committed"] = committed;
  j["first_pass"] = first_pass;
  j["first_pass_delayed"] = first_pass_delayed;
  j["retry_committed"] = retry_committed;
  j["retry_aborted"] = retry_aborted;
  j["early_aborts"] = early_aborts;
  j["conflict_aborts"] = conflict_aborts;
  j["recovery_aborts"] = recovery_aborts;
  j["ro_attempts"] = ro_attempts;
  j["ro_aborts"] = ro_aborts;
  j["given_up"] = given_up;
  j["dropped_arrivals"] = dropped_arrivals;
  j["ops"] = ops;
  j["delayed_ops"] = delayed_ops;
  j["commit_rate"] = commit_rate;
  j["first_pass_clean"] = first_pass_clean;
  j["first_pass_frac"] = first_pass_frac;
  j["smart_retry_frac"] = smart_retry_frac;
  j["aborted_frac"] = aborted_frac;
  j["smart_retry_rescue"] = smart_retry_rescue;
  j["rtc_delayed_frac"] = rtc_delayed_frac;
  j["ro_abort_rate"] = ro_abort_rate;
  j["mean_rounds"] = mean_rounds;
  j["throughput"] = throughput;
  j["latency_us"] = {{"p50", latency_p50}, {"p90", latency_p90}, {"p99", latency_p99}};
  j["messages"] = messages;
  j["events"] = events;
  j["duration_us"] = duration;
  return j.dump(2);
}

}  // namespace ncc
