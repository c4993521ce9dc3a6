#include "ncc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ncc {

using nlohmann::json;

std::optional<std::int64_t> parse_duration(std::string_view s) {
  double mult = 1;
  auto strip = [&](std::string_view suffix, double m) {
    if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
      s.remove_suffix(suffix.size());
      mult = m;
      return true;
    }
    return false;
  };
  strip("us", 1) || strip("ms", 1e3) || strip("s", 1e6);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0) return std::nullopt;
  return static_cast<std::int64_t>(v * mult);
}

namespace {

struct Bad {
  std::string what;
};

std::int64_t duration_of(const json& j, const char* field) {
  if (j.is_number()) return j.get<std::int64_t>();
  if (j.is_string()) {
    if (auto d = parse_duration(j.get<std::string>())) return *d;
  }
  throw Bad{std::string("bad duration for ") + field};
}

template <typename T>
void opt(const json& j, const char* field, T& out) {
  if (auto it = j.find(field); it != j.end()) out = it->get<T>();
}

void opt_duration(const json& j, const char* field, std::int64_t& out) {
  if (auto it = j.find(field); it != j.end()) out = duration_of(*it, field);
}

DelayModel delay_of(const json& j) {
  auto kind = j.value("kind", std::string("uniform"));
  if (kind == "fixed") return DelayModel::fixed(j.at("delay").get<std::int64_t>());
  if (kind == "uniform") return DelayModel::uniform(j.at("min").get<std::int64_t>(), j.at("max").get<std::int64_t>());
  if (kind == "lognormal") return DelayModel::lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
  throw Bad{"unknown delay kind " + kind};
}

json delay_json(const DelayModel& d) {
  switch (d.kind) {
    case DelayModel::Kind::fixed: return {{"kind", "fixed"}, {"delay", static_cast<std::int64_t>(d.a)}};
    case DelayModel::Kind::uniform:
      return {{"kind", "uniform"}, {"min", static_cast<std::int64_t>(d.a)}, {"max", static_cast<std::int64_t>(d.b)}};
    case DelayModel::Kind::lognormal: return {{"kind", "lognormal"}, {"mu", d.a}, {"sigma", d.b}};
  }
  return {};
}

FailureMode failure_mode_of(const std::string& s) {
  if (s == "drop-commits") return FailureMode::drop_commits;
  if (s == "full-stop") return FailureMode::full_stop;
  throw Bad{"unknown failure mode " + s};
}

}  // namespace

ConfigLoad parse_config(std::string_view text) {
  ConfigLoad out;
  try {
    json j = json::parse(text.begin(), text.end(), nullptr, true, true);
    if (!j.is_object()) throw Bad{"top level must be an object"};
    BenchConfig c;
    if (auto it = j.find("protocol"); it != j.end()) {
      auto p = protocol_from(it->get<std::string>());
      if (!p) throw Bad{"unknown protocol " + it->get<std::string>()};
      c.protocol = *p;
    }
    if (auto it = j.find("workload"); it != j.end()) {
      const json& w = *it;
      auto name = w.is_string() ? w.get<std::string>() : w.value("name", std::string("google-f1"));
      auto kind = workload_kind_from(name);
      if (!kind) throw Bad{"unknown workload " + name};
      c.workload = default_spec(*kind);
      if (w.is_object()) {
        auto& s = c.workload;
        opt(w, "write_fraction", s.write_fraction);
        opt(w, "ro_keys_min", s.ro_keys_min);
        opt(w, "ro_keys_max", s.ro_keys_max);
        opt(w, "ro_keys_log_uniform", s.ro_keys_log_uniform);
        opt(w, "rw_keys_min", s.rw_keys_min);
        opt(w, "rw_keys_max", s.rw_keys_max);
        opt(w, "value_min", s.value_min);
        opt(w, "value_max", s.value_max);
        opt(w, "value_sd", s.value_sd);
        opt(w, "columns", s.columns);
        opt(w, "zipf", s.zipf);
        opt(w, "keys", s.keys);
        opt(w, "assoc_ratio", s.assoc_ratio);
        opt(w, "warehouses_per_server", s.warehouses_per_server);
        opt(w, "districts", s.districts);
        opt(w, "mix", s.mix);
      }
    } else {
      c.workload = default_spec(WorkloadKind::google_f1);
    }
    if (auto e = c.workload.validate(); !e.empty()) throw Bad{e};
    opt(j, "seed", c.seed);
    opt(j, "servers", c.servers);
    opt(j, "clients", c.clients);
    opt(j, "rate", c.rate);
    opt_duration(j, "start_at", c.start_at);
    opt_duration(j, "duration", c.duration);
    opt_duration(j, "drain_limit", c.drain_limit);
    if (c.servers == 0 || c.clients == 0) throw Bad{"need at least one server and one client"};
    if (auto it = j.find("sim"); it != j.end()) {
      const json& s = *it;
      if (auto d = s.find("client_server"); d != s.end()) c.sim.client_server = delay_of(*d);
      if (auto d = s.find("server_server"); d != s.end()) c.sim.server_server = delay_of(*d);
      opt(s, "reorder", c.sim.reorder);
      opt(s, "duplicate_prob", c.sim.duplicate_prob);
      opt(s, "clock_skew", c.sim.clock_skew);
      opt(s, "server_service_min", c.sim.server_service_min);
      opt(s, "server_service_max", c.sim.server_service_max);
      opt(s, "server_service_per_op", c.sim.server_service_per_op);
      opt(s, "event_cap", c.sim.event_cap);
      if (c.sim.duplicate_prob < 0 || c.sim.duplicate_prob > 1) throw Bad{"duplicate_prob must be in [0, 1]"};
    }
    if (auto it = j.find("ncc"); it != j.end()) {
      const json& n = *it;
      opt(n, "rtc", c.ncc.rtc);
      opt(n, "early_abort", c.ncc.early_abort);
      opt_duration(n, "retention", c.ncc.retention);
      opt_duration(n, "gc_interval", c.ncc.gc_interval);
      opt_duration(n, "tx_ttl", c.ncc.tx_ttl);
      opt_duration(n, "recovery_timeout", c.ncc.recovery_timeout);
    }
    if (auto it = j.find("client"); it != j.end()) {
      const json& n = *it;
      opt(n, "max_outstanding", c.client.max_outstanding);
      opt(n, "backlog_cap", c.client.backlog_cap);
      opt_duration(n, "rtt", c.client.rtt);
      opt(n, "max_attempts", c.client.max_attempts);
      opt(n, "ro_fallback", c.client.ro_fallback);
    }
    if (auto it = j.find("failure"); it != j.end() && !it->is_null()) {
      c.crash_at = duration_of(it->at("at"), "failure.at");
      c.crash_mode = failure_mode_of(it->value("mode", std::string("drop-commits")));
    }
    if (auto it = j.find("trace"); it != j.end()) {
      auto t = it->get<std::string>();
      if (t == "history") {
        c.trace_level = TraceLevel::history;
      } else if (t == "full") {
        c.trace_level = TraceLevel::full;
      } else {
        throw Bad{"trace must be history or full"};
      }
    }
    out.config = std::move(c);
  } catch (const Bad& b) {
    out.error = b.what;
  } catch (const json::exception& e) {
    out.error = e.what();
  }
  return out;
}

ConfigLoad load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {std::nullopt, "cannot open " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const BenchConfig& c) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(c.protocol);
  const auto& w = c.workload;
  j["workload"] = {{"name", to_string(w.kind)},
                   {"write_fraction", w.write_fraction},
                   {"ro_keys_min", w.ro_keys_min},
                   {"ro_keys_max", w.ro_keys_max},
                   {"ro_keys_log_uniform", w.ro_keys_log_uniform},
                   {"rw_keys_min", w.rw_keys_min},
                   {"rw_keys_max", w.rw_keys_max},
                   {"value_min", w.value_min},
                   {"value_max", w.value_max},
                   {"value_sd", w.value_sd},
                   {"columns", w.columns},
                   {"zipf", w.zipf},
                   {"keys", w.keys},
                   {"assoc_ratio", w.assoc_ratio},
                   {"warehouses_per_server", w.warehouses_per_server},
                   {"districts", w.districts},
                   {"mix", w.mix}};
  j["seed"] = c.seed;
  j["servers"] = c.servers;
  j["clients"] = c.clients;
  j["rate"] = c.rate;
  j["start_at"] = c.start_at;
  j["duration"] = c.duration;
  j["drain_limit"] = c.drain_limit;
  j["sim"] = {{"client_server", delay_json(c.sim.client_server)},
              {"server_server", delay_json(c.sim.server_server)},
              {"reorder", c.sim.reorder},
              {"duplicate_prob", c.sim.duplicate_prob},
              {"clock_skew", c.sim.clock_skew},
              {"server_service_min", c.sim.server_service_min},
              {"server_service_max", c.sim.server_service_max},
              {"server_service_per_op", c.sim.server_service_per_op},
              {"event_cap", c.sim.event_cap}};
  j["ncc"] = {{"rtc", c.ncc.rtc},
              {"early_abort", c.ncc.early_abort},
              {"retention", c.ncc.retention},
              {"gc_interval", c.ncc.gc_interval},
              {"tx_ttl", c.ncc.tx_ttl},
              {"recovery_timeout", c.ncc.recovery_timeout}};
  j["client"] = {{"max_outstanding", c.client.max_outstanding},
                 {"backlog_cap", c.client.backlog_cap},
                 {"rtt", c.client.rtt},
                 {"max_attempts", c.client.max_attempts},
                 {"ro_fallback", c.client.ro_fallback}};
  if (c.crash_at >= 0) {
    j["failure"] = {{"at", c.crash_at}, {"mode", c.crash_mode == FailureMode::drop_commits ? "drop-commits" : "full-stop"}};
  }
  j["trace"] = c.trace_level == TraceLevel::full ? "full" : "history";
  return j.dump(2);
}

}  // namespace ncc
