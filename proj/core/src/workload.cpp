#include "ncc/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_set>

namespace ncc {

std::string_view to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::google_f1: return "google-f1";
    case WorkloadKind::facebook_tao: return "facebook-tao";
    case WorkloadKind::tpcc_lite: return "tpcc-lite";
    case WorkloadKind::google_wf: return "google-wf";
  }
  return "?";
}

std::optional<WorkloadKind> workload_kind_from(std::string_view s) {
  for (auto k : {WorkloadKind::google_f1, WorkloadKind::facebook_tao, WorkloadKind::tpcc_lite,
                 WorkloadKind::google_wf}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

WorkloadSpec default_spec(WorkloadKind k) {
  WorkloadSpec s;
  s.kind = k;
  switch (k) {
    case WorkloadKind::google_f1:
      break;
    case WorkloadKind::google_wf:
      s.write_fraction = 0.3;
      break;
    case WorkloadKind::facebook_tao:
      s.write_fraction = 0.002;
      s.ro_keys_max = 1000;
      s.ro_keys_log_uniform = true;
      s.rw_keys_max = 1;
      s.value_min = 1024;
      s.value_max = 4096;
      s.value_sd = 0;
      s.columns = 1;
      break;
    case WorkloadKind::tpcc_lite:
      s.write_fraction = 0;
      s.value_min = 64;
      s.value_max = 512;
      s.value_sd = 0;
      s.columns = 1;
      s.zipf = 0;
      break;
  }
  return s;
}

std::string WorkloadSpec::validate() const {
  if (write_fraction < 0 || write_fraction > 1) return "write_fraction must be in [0, 1]";
  if (ro_keys_min == 0 || ro_keys_min > ro_keys_max) return "bad read-only key range";
  if (rw_keys_min == 0 || rw_keys_min > rw_keys_max) return "bad read-write key range";
  if (value_min > value_max) return "bad value size range";
  if (keys == 0) return "empty key space";
  if (zipf < 0) return "zipf exponent must be non-negative";
  if (kind != WorkloadKind::tpcc_lite && ro_keys_max > keys) return "read set larger than key space";
  if (kind == WorkloadKind::tpcc_lite) {
    if (mix.size() != 5) return "tpcc mix needs five weights";
    double sum = 0;
    for (auto w : mix) {
      if (w < 0) return "negative tpcc mix weight";
      sum += w;
    }
    if (sum <= 0) return "tpcc mix is empty";
    if (warehouses_per_server == 0 || districts == 0) return "tpcc scale must be positive";
  }
  return {};
}

namespace {

std::shared_ptr<const std::vector<double>> zipf_cdf(std::uint64_t n, double s) {
  static std::mutex mu;
  static std::map<std::pair<std::uint64_t, double>, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{n, s}];
  if (!slot) {
    auto cdf = std::make_shared<std::vector<double>>(n);
    double acc = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      acc += std::pow(static_cast<double>(i + 1), -s);
      (*cdf)[i] = acc;
    }
    slot = std::move(cdf);
  }
  return slot;
}

}  // namespace

Zipf::Zipf(std::uint64_t n, double s) : n_(n), cdf_(zipf_cdf(n, s)) {}

std::uint64_t Zipf::sample(Rng& rng) const {
  const auto& c = *cdf_;
  double u = rng.uniform01() * c.back();
  auto it = std::upper_bound(c.begin(), c.end(), u);
  return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - c.begin()), n_ - 1);
}

Workload::Workload(WorkloadSpec spec, std::uint32_t servers) : spec_(std::move(spec)), servers_(std::max(1u, servers)) {
  if (spec_.kind != WorkloadKind::tpcc_lite) zipf_.emplace(spec_.keys, spec_.zipf);
}

__extension__ using u128 = unsigned __int128;

Key Workload::key_of_rank(std::uint64_t rank) const {
  constexpr std::uint64_t kMul = 2654435761ULL;  // prime
  std::uint64_t n = spec_.keys;
  std::uint64_t mul = n % kMul == 0 ? 1 : kMul;
  return static_cast<Key>((static_cast<u128>(rank) * mul + 40503) % n);
}

bool Workload::is_object_key(Key key) const {
  double objects = 1.0 / (1.0 + spec_.assoc_ratio);
  return static_cast<double>(splitmix64(key) % 10000) < objects * 10000;
}

std::uint32_t Workload::route(Key key) const {
  if (spec_.kind == WorkloadKind::tpcc_lite) {
    return static_cast<std::uint32_t>(tpcc::warehouse_of(key) / spec_.warehouses_per_server) % servers_;
  }
  return static_cast<std::uint32_t>(splitmix64(key) % servers_);
}

Value Workload::value(Rng& rng) const {
  double size;
  if (spec_.value_sd > 0) {
    size = rng.normal((spec_.value_min + spec_.value_max) / 2.0, spec_.value_sd);
    size = std::clamp(size, static_cast<double>(spec_.value_min), static_cast<double>(spec_.value_max));
  } else {
    size = static_cast<double>(rng.uniform_int(spec_.value_min, spec_.value_max));
  }
  // Columns live in the row's value.
  return {rng.next(), static_cast<std::uint32_t>(size) * std::max(1u, spec_.columns)};
}

std::vector<Key> Workload::distinct_keys(Rng& rng, std::uint32_t n) const {
  std::vector<Key> out;
  out.reserve(n);
  if (n <= 16) {
    while (out.size() < n) {
      Key k = key_of_rank(zipf_->sample(rng));
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
  }
  std::unordered_set<Key> seen;
  seen.reserve(n * 2);
  while (out.size() < n) {
    Key k = key_of_rank(zipf_->sample(rng));
    if (seen.insert(k).second) out.push_back(k);
  }
  return out;
}

TxProgram Workload::next(Rng& rng) const {
  switch (spec_.kind) {
    case WorkloadKind::facebook_tao: return tao_tx(rng);
    case WorkloadKind::tpcc_lite: return tpcc_tx(rng);
    default: return kv_tx(rng);
  }
}

TxProgram Workload::kv_tx(Rng& rng) const {
  TxProgram p;
  if (rng.bernoulli(spec_.write_fraction)) {
    p.label = "rw";
    auto n = static_cast<std::uint32_t>(rng.uniform_int(spec_.rw_keys_min, spec_.rw_keys_max));
    auto keys = distinct_keys(rng, n);
    std::vector<bool> write(n);
    bool any = false;
    for (std::uint32_t i = 0; i < n; ++i) any |= (write[i] = rng.bernoulli(0.5));
    if (!any) write[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = true;
    for (auto k : keys) p.first.push_back({k, OpKind::read, {}, {}});
    for (std::uint32_t i = 0; i < n; ++i) {
      if (write[i]) p.first.push_back({keys[i], OpKind::write, value(rng), {}});
    }
    return p;
  }
  p.label = "ro";
  p.read_only = true;
  auto n = static_cast<std::uint32_t>(rng.uniform_int(spec_.ro_keys_min, spec_.ro_keys_max));
  for (auto k : distinct_keys(rng, n)) p.first.push_back({k, OpKind::read, {}, {}});
  return p;
}

TxProgram Workload::tao_tx(Rng& rng) const {
  TxProgram p;
  if (rng.bernoulli(spec_.write_fraction)) {
    p.label = "rw";
    auto n = static_cast<std::uint32_t>(rng.uniform_int(spec_.rw_keys_min, spec_.rw_keys_max));
    for (auto k : distinct_keys(rng, n)) p.first.push_back({k, OpKind::write, value(rng), {}});
    return p;
  }
  p.label = "ro";
  p.read_only = true;
  std::uint32_t n;
  if (spec_.ro_keys_log_uniform) {
    double lo = std::log(static_cast<double>(spec_.ro_keys_min));
    double hi = std::log(static_cast<double>(spec_.ro_keys_max) + 1);
    n = static_cast<std::uint32_t>(std::exp(rng.uniform(lo, hi)));
    n = std::clamp(n, spec_.ro_keys_min, spec_.ro_keys_max);
  } else {
    n = static_cast<std::uint32_t>(rng.uniform_int(spec_.ro_keys_min, spec_.ro_keys_max));
  }
  for (auto k : distinct_keys(rng, n)) p.first.push_back({k, OpKind::read, {}, {}});
  return p;
}

namespace {

using namespace tpcc;

constexpr std::uint64_t kCustomers = 3000;
constexpr std::uint64_t kItems = 100000;

void read(std::vector<Op>& ops, Key k) { ops.push_back({k, OpKind::read, {}, {}}); }
void write(std::vector<Op>& ops, Key k, Rng& rng) { ops.push_back({k, OpKind::write, {rng.next(), 64}, {}}); }

std::uint64_t nurand(Rng& rng, std::uint64_t a, std::uint64_t x, std::uint64_t y) {
  auto r1 = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(a)));
  auto r2 = static_cast<std::uint64_t>(rng.uniform_int(static_cast<std::int64_t>(x), static_cast<std::int64_t>(y)));
  return ((r1 | r2) % (y - x + 1)) + x;
}

}  // namespace

TxProgram Workload::tpcc_tx(Rng& rng) const {
  const std::uint64_t warehouses = std::uint64_t{spec_.warehouses_per_server} * servers_;
  const auto w = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(warehouses) - 1));
  const auto d = static_cast<std::uint64_t>(rng.uniform_int(0, spec_.districts - 1));
  auto other_w = [&] {
    if (warehouses == 1) return w;
    auto o = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(warehouses) - 2));
    return o >= w ? o + 1 : o;
  };
  double total = 0;
  for (auto x : spec_.mix) total += x;
  double pick = rng.uniform(0, total);
  int kind = 0;
  while (kind < 4 && pick >= spec_.mix[static_cast<std::size_t>(kind)]) pick -= spec_.mix[static_cast<std::size_t>(kind++)];

  TxProgram p;
  auto& ops = p.first;
  switch (kind) {
    case 0: {  // new-order
      p.label = "new_order";
      read(ops, key(warehouse, w, 0, 1));
      read(ops, key(district, w, d, 2));
      auto c = nurand(rng, 1023, 0, kCustomers - 1);
      read(ops, key(customer, w, d * kCustomers + c, 1));
      auto lines = rng.uniform_int(5, 15);
      std::vector<std::pair<std::uint64_t, std::uint64_t>> stock_rows;
      for (std::int64_t i = 0; i < lines; ++i) {
        auto item_id = nurand(rng, 8191, 0, kItems - 1);
        auto supply = rng.bernoulli(0.01) ? other_w() : w;
        if (std::find(stock_rows.begin(), stock_rows.end(), std::make_pair(supply, item_id)) != stock_rows.end()) continue;
        stock_rows.emplace_back(supply, item_id);
        read(ops, key(item, w, item_id));
        read(ops, key(stock, supply, item_id, 1));
      }
      write(ops, key(district, w, d, 2), rng);
      for (auto [sw, id] : stock_rows) write(ops, key(stock, sw, id, 1), rng);
      auto o = rng.next() & 0xffffffffULL;
      write(ops, key(order, w, (d << 32) | o), rng);
      write(ops, key(new_order, w, (d << 32) | o), rng);
      for (std::size_t i = 0; i < stock_rows.size(); ++i) write(ops, key(order_line, w, (d << 32) | o, i), rng);
      break;
    }
    case 1: {  // payment: locate the customer, then pay
      p.label = "payment";
      p.num_shots = 2;
      const auto cw = rng.bernoulli(0.15) ? other_w() : w;
      const auto cd = static_cast<std::uint64_t>(rng.uniform_int(0, spec_.districts - 1));
      const bool by_name = rng.bernoulli(0.6);
      const auto last = nurand(rng, 255, 0, 999);
      const auto cid = nurand(rng, 1023, 0, kCustomers - 1);
      read(ops, key(warehouse, w, 0, 2));
      read(ops, key(district, w, d, 3));
      if (by_name) read(ops, key(customer_index, cw, cd * 1000 + last));
      write(ops, key(warehouse, w, 0, 2), rng);
      write(ops, key(district, w, d, 3), rng);
      const auto seed = rng.next();
      const auto hist = rng.next() & 0xffffffffULL;
      p.next = [=](std::uint16_t, const std::vector<OpResult>& so_far) {
        Rng r(seed);
        auto c = cid;
        if (by_name && so_far.size() >= 3) c = so_far[2].value.digest % kCustomers;
        std::vector<Op> out;
        read(out, key(customer, cw, cd * kCustomers + c, 1));
        write(out, key(customer, cw, cd * kCustomers + c, 1), r);
        write(out, key(history, w, (d << 32) | hist), r);
        return out;
      };
      break;
    }
    case 2: {  // order-status: find the customer, then read the latest order
      p.label = "order_status";
      p.read_only = true;
      p.num_shots = 2;
      const auto cid = nurand(rng, 1023, 0, kCustomers - 1);
      read(ops, key(customer, w, d * kCustomers + cid, 1));
      read(ops, key(customer, w, d * kCustomers + cid, 2));
      p.next = [=](std::uint16_t, const std::vector<OpResult>& so_far) {
        std::uint64_t o = so_far.empty() ? 0 : so_far[1].value.digest & 0xffffffffULL;
        std::vector<Op> out;
        read(out, key(order, w, (d << 32) | o));
        for (std::uint64_t i = 0; i < 5; ++i) read(out, key(order_line, w, (d << 32) | o, i));
        return out;
      };
      break;
    }
    case 3: {  // delivery: every district of one warehouse
      p.label = "delivery";
      std::vector<Key> cust;
      for (std::uint64_t dd = 0; dd < spec_.districts; ++dd) {
        read(ops, key(district, w, dd, 4));
        cust.push_back(key(customer, w, dd * kCustomers + nurand(rng, 1023, 0, kCustomers - 1), 1));
        read(ops, cust.back());
      }
      for (std::uint64_t dd = 0; dd < spec_.districts; ++dd) {
        write(ops, key(district, w, dd, 4), rng);
        write(ops, cust[dd], rng);
      }
      break;
    }
    default: {  // stock-level
      p.label = "stock_level";
      p.read_only = true;
      read(ops, key(district, w, d, 2));
      std::vector<std::uint64_t> ids;
      while (ids.size() < 20) {
        auto id = nurand(rng, 8191, 0, kItems - 1);
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
      for (auto id : ids) read(ops, key(stock, w, id, 1));
      break;
    }
  }
  return p;
}

}  // namespace ncc
