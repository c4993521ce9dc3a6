#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncc/checker.hpp"
#include "ncc/trace.hpp"
#include "ncc/types.hpp"

namespace ncc {

// Small hand-scheduled runs that replay specific interleavings.
struct ScenarioResult {
  std::string name;
  bool ok = false;  // the run showed the expected behaviour
  std::vector<std::string> lines;
  std::vector<TraceRecord> trace;
  CheckResult check;
};

std::vector<std::string_view> scenario_names();
std::optional<ScenarioResult> run_scenario(std::string_view name, std::uint64_t seed = 1);

// Two clients with skewed link latencies; with asynchrony-aware timestamps
// both pre-assigned timestamps match arrival order and both commit.
ScenarioResult fig4a(bool asynchrony_aware = true);
// Pairs (0,4) and (6,6) fail the safeguard; smart retry commits at t'=6.
ScenarioResult fig4b_smart_retry();
// tx3 writes A and B, tx1 reads tx3's write on A, then tx2 (issued after tx1
// returns) reads B before tx3's write lands there. Timing is jittered by seed.
ScenarioResult rtc_inversion(std::uint64_t seed, bool rtc);
// A lagging client reads a key right after a leading client's write returned.
ScenarioResult stale_read(Protocol p);
// A client stops sending commit messages; the backup coordinator finishes
// its transaction and a dependent read resumes.
ScenarioResult failure_recovery(std::int64_t timeout = 1'000'000);

}  // namespace ncc
