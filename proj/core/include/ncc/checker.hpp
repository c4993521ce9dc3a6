#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncc/rng.hpp"
#include "ncc/trace.hpp"

namespace ncc {

struct HistoryTx {
  TxId id;
  std::int64_t start = INT64_MAX;
  std::int64_t end = INT64_MAX;  // client-observed completion; +inf when only a backup decided
  bool began = false;
  bool committed = false;
  bool aborted = false;
  std::vector<std::pair<Key, TxId>> reads;
  std::vector<Key> writes;
};

struct History {
  std::vector<HistoryTx> txs;  // committed transactions only
  // Per key, creators in version order (the initial version is implicit).
  std::vector<std::pair<Key, std::vector<std::size_t>>> versions;
  std::size_t aborted = 0;
};

struct HistoryBuild {
  std::optional<History> history;
  std::string error;  // set when malformed
};

HistoryBuild build_history(const std::vector<TraceRecord>& records);

enum class EdgeKind : std::uint8_t { wr, rw, ww };

struct Edge {
  std::size_t from;
  std::size_t to;
  EdgeKind kind;
};

// Execution edges of the real-time serialization graph.
std::vector<Edge> execution_edges(const History& h);

enum class Verdict : std::uint8_t { ok, violation, malformed };

struct CheckResult {
  Verdict verdict = Verdict::ok;
  bool total_order = true;  // no execution cycle
  bool real_time = true;    // no execution path against a real-time edge
  std::string error;
  std::vector<TxId> cycle;      // execution cycle, first element repeated implicitly
  std::vector<TxId> inversion;  // execution path tx2 ... tx1 where tx1 finished before tx2 began
  std::size_t committed = 0;
  std::size_t aborted = 0;
  std::size_t edges = 0;
  std::optional<bool> oracle;  // brute-force verdict, when requested and small enough

  std::string describe() const;
};

struct CheckOptions {
  bool oracle = false;
  std::size_t oracle_max = 8;
};

CheckResult check_history(const History& h, const CheckOptions& opt = {});
CheckResult check_trace(const std::vector<TraceRecord>& records, const CheckOptions& opt = {});

// Searches every serial order consistent with real time for one that
// reproduces all reads and per-key write orders. Requires h.txs.size() <= 20.
bool brute_force_oracle(const History& h);

// Random well-formed history of up to max_tx committed transactions over a
// handful of keys, for cross-validation.
std::vector<TraceRecord> random_history(Rng& rng, std::size_t max_tx = 8, std::size_t keys = 3);

}  // namespace ncc
