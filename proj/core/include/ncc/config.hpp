#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ncc/bench.hpp"

namespace ncc {

struct ConfigLoad {
  std::optional<BenchConfig> config;
  std::string error;
};

// JSON, comments allowed. Missing fields keep their defaults; the workload
// section starts from the named workload's defaults.
ConfigLoad parse_config(std::string_view text);
ConfigLoad load_config(const std::string& path);
std::string config_to_json(const BenchConfig& cfg);

// "10s", "250ms", "40us" or a bare number of microseconds.
std::optional<std::int64_t> parse_duration(std::string_view s);

}  // namespace ncc
