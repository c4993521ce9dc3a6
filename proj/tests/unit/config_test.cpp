#include <gtest/gtest.h>

#include "ncc/config.hpp"

namespace ncc {
namespace {

TEST(Config, Durations) {
  EXPECT_EQ(parse_duration("10s"), 10'000'000);
  EXPECT_EQ(parse_duration("250ms"), 250'000);
  EXPECT_EQ(parse_duration("40us"), 40);
  EXPECT_EQ(parse_duration("17"), 17);
  EXPECT_FALSE(parse_duration("ten").has_value());
  EXPECT_FALSE(parse_duration("").has_value());
}

TEST(Config, EmptyObjectKeepsDefaults) {
  auto c = parse_config("{}");
  ASSERT_TRUE(c.config.has_value()) << c.error;
  BenchConfig d;
  EXPECT_EQ(c.config->servers, d.servers);
  EXPECT_EQ(c.config->protocol, d.protocol);
}

TEST(Config, FieldsAndComments) {
  auto c = parse_config(R"({
    // the protocol under test
    "protocol": "d2pl-ww",
    "workload": {"name": "google-wf", "write_fraction": 0.1},
    "servers": 3, "duration": "2ms",
    "sim": {"client_server": {"kind": "fixed", "delay": 70}, "clock_skew": 0},
    "ncc": {"recovery_timeout": "1s"},
    "failure": {"at": "500us", "mode": "full-stop"},
    "trace": "full"
  })");
  ASSERT_TRUE(c.config.has_value()) << c.error;
  const auto& b = *c.config;
  EXPECT_EQ(b.protocol, Protocol::d2pl_ww);
  EXPECT_EQ(b.workload.kind, WorkloadKind::google_wf);
  EXPECT_DOUBLE_EQ(b.workload.write_fraction, 0.1);
  EXPECT_EQ(b.workload.zipf, default_spec(WorkloadKind::google_wf).zipf);
  EXPECT_EQ(b.servers, 3u);
  EXPECT_EQ(b.duration, 2000);
  EXPECT_EQ(b.sim.client_server.kind, DelayModel::Kind::fixed);
  EXPECT_EQ(b.ncc.recovery_timeout, 1'000'000);
  EXPECT_EQ(b.crash_at, 500);
  EXPECT_EQ(b.crash_mode, FailureMode::full_stop);
  EXPECT_EQ(b.trace_level, TraceLevel::full);
}

TEST(Config, Errors) {
  EXPECT_FALSE(parse_config("[1]").config.has_value());
  EXPECT_FALSE(parse_config("{\"protocol\": \"tapir\"}").config.has_value());
  EXPECT_FALSE(parse_config("{\"servers\": 0}").config.has_value());
  EXPECT_FALSE(parse_config("{\"sim\": {\"duplicate_prob\": 2}}").config.has_value());
  EXPECT_FALSE(parse_config("{\"duration\": \"soon\"}").config.has_value());
  EXPECT_FALSE(parse_config("{").config.has_value());
  EXPECT_NE(load_config("/nonexistent/x.json").error, "");
}

TEST(Config, JsonRoundTrip) {
  auto c = parse_config(R"({"protocol": "mvto", "workload": "facebook-tao", "seed": 9, "rate": 1500})");
  ASSERT_TRUE(c.config.has_value()) << c.error;
  auto again = parse_config(config_to_json(*c.config));
  ASSERT_TRUE(again.config.has_value()) << again.error;
  EXPECT_EQ(config_to_json(*again.config), config_to_json(*c.config));
  EXPECT_EQ(again.config->seed, 9u);
  EXPECT_EQ(again.config->workload.kind, WorkloadKind::facebook_tao);
}

TEST(Config, ShippedExampleLoads) {
  auto c = load_config(NCC_EXAMPLE_CONFIG);
  ASSERT_TRUE(c.config.has_value()) << c.error;
  EXPECT_EQ(c.config->protocol, Protocol::ncc);
  EXPECT_EQ(c.config->duration, 2'000'000);
  EXPECT_EQ(c.config->crash_at, 1'000'000);
}

}  // namespace
}  // namespace ncc
