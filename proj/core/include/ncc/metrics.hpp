#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ncc {

enum class Outcome : std::uint8_t {
  committed,          // first safeguard pass, no delayed response
  committed_delayed,  // first safeguard pass, some response held back
  committed_retry,    // rescued by smart retry
  aborted_retry,      // smart retry failed
  aborted_early,
  aborted_ro,
  aborted_conflict,  // lock, validation, wound or timestamp-order rejection
  aborted_recovery,  // decided by a backup coordinator
};

inline bool is_commit(Outcome o) {
  return o == Outcome::committed || o == Outcome::committed_delayed || o == Outcome::committed_retry;
}

struct AttemptRecord {
  Outcome outcome = Outcome::committed;
  bool read_only = false;
  std::uint16_t rounds = 0;
  std::int64_t begin = 0;  // global virtual time
  std::int64_t end = 0;
  std::uint32_t ops = 0;
  std::uint32_t delayed_ops = 0;
};

class MetricsCollector {
 public:
  void add(const AttemptRecord& r) { records_.push_back(r); }
  void note_given_up() { ++given_up_; }
  void note_dropped_arrival() { ++dropped_; }

  const std::vector<AttemptRecord>& records() const { return records_; }
  std::uint64_t given_up() const { return given_up_; }
  std::uint64_t dropped_arrivals() const { return dropped_; }

 private:
  std::vector<AttemptRecord> records_;
  std::uint64_t given_up_ = 0;
  std::uint64_t dropped_ = 0;
};

struct MetricsReport {
  std::string protocol;
  std::string workload;
  std::uint64_t seed = 0;

  std::uint64_t attempts = 0;
  std::uint64_t committed = 0;
  std::uint64_t first_pass = 0;  // includes delayed
  std::uint64_t first_pass_delayed = 0;
  std::uint64_t retry_committed = 0;
  std::uint64_t retry_aborted = 0;
  std::uint64_t early_aborts = 0;
  std::uint64_t conflict_aborts = 0;
  std::uint64_t recovery_aborts = 0;
  std::uint64_t ro_attempts = 0;
  std::uint64_t ro_aborts = 0;
  std::uint64_t given_up = 0;
  std::uint64_t dropped_arrivals = 0;
  std::uint64_t ops = 0;
  std::uint64_t delayed_ops = 0;

  double commit_rate = 0;          // committed attempts / attempts
  double first_pass_clean = 0;     // no-delay first pass / attempts
  double first_pass_frac = 0;      // first pass / attempts
  double smart_retry_frac = 0;     // rescued / attempts
  double aborted_frac = 0;         // aborted / attempts
  double smart_retry_rescue = 0;   // rescued / safeguard rejects
  double rtc_delayed_frac = 0;     // delayed ops / ops
  double ro_abort_rate = 0;        // ro aborts / ro attempts
  double mean_rounds = 0;          // over committed attempts
  double throughput = 0;           // commits per virtual second
  std::int64_t latency_p50 = 0;    // committed attempts, microseconds
  std::int64_t latency_p90 = 0;
  std::int64_t latency_p99 = 0;

  std::uint64_t messages = 0;
  std::uint64_t events = 0;
  std::int64_t duration = 0;

  std::string to_json() const;
};

MetricsReport summarize(const MetricsCollector& m, std::int64_t duration);

// Commits whose completion falls in [from, to), per virtual second.
double throughput(const MetricsCollector& m, std::int64_t from, std::int64_t to);

}  // namespace ncc
