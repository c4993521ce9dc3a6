#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncc/client.hpp"

namespace ncc {

enum class WorkloadKind : std::uint8_t { google_f1, facebook_tao, tpcc_lite, google_wf };

std::string_view to_string(WorkloadKind k);
std::optional<WorkloadKind> workload_kind_from(std::string_view s);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::google_f1;
  double write_fraction = 0.003;
  std::uint32_t ro_keys_min = 1;
  std::uint32_t ro_keys_max = 10;
  bool ro_keys_log_uniform = false;  // heavy-tailed read sets
  std::uint32_t rw_keys_min = 1;
  std::uint32_t rw_keys_max = 10;
  std::uint32_t value_min = 1481;
  std::uint32_t value_max = 1719;
  double value_sd = 119;  // 0 means uniform in [min, max]
  std::uint32_t columns = 10;
  double zipf = 0.8;
  std::uint64_t keys = 1'000'000;
  double assoc_ratio = 9.5;  // association keys per object key
  std::uint32_t warehouses_per_server = 8;
  std::uint32_t districts = 10;
  std::vector<double> mix{44, 44, 4, 4, 4};  // new-order, payment, order-status, delivery, stock-level

  // Empty when valid.
  std::string validate() const;
};

WorkloadSpec default_spec(WorkloadKind k);

// Rank sampler for P(rank = i) proportional to 1 / (i + 1)^s over [0, n).
class Zipf {
 public:
  Zipf(std::uint64_t n, double s);
  std::uint64_t sample(Rng& rng) const;
  std::uint64_t size() const { return n_; }

 private:
  std::uint64_t n_;
  std::shared_ptr<const std::vector<double>> cdf_;
};

class Workload {
 public:
  Workload(WorkloadSpec spec, std::uint32_t servers);

  TxProgram next(Rng& rng) const;
  // Server index in [0, servers).
  std::uint32_t route(Key key) const;

  const WorkloadSpec& spec() const { return spec_; }
  std::uint32_t servers() const { return servers_; }
  // Popular ranks are scattered over the key space.
  Key key_of_rank(std::uint64_t rank) const;
  bool is_object_key(Key key) const;

 private:
  TxProgram kv_tx(Rng& rng) const;
  TxProgram tao_tx(Rng& rng) const;
  TxProgram tpcc_tx(Rng& rng) const;
  std::vector<Key> distinct_keys(Rng& rng, std::uint32_t n) const;
  Value value(Rng& rng) const;

  WorkloadSpec spec_;
  std::uint32_t servers_;
  std::optional<Zipf> zipf_;
};

namespace tpcc {

enum Table : std::uint64_t { warehouse = 1, district, customer, customer_index, history, order, new_order, order_line, item, stock };

// Row-major key: table, warehouse, row, column.
constexpr Key key(Table t, std::uint64_t w, std::uint64_t row, std::uint64_t col = 0) {
  return (static_cast<std::uint64_t>(t) << 56) | (w << 40) | ((row & 0xfffffffffULL) << 4) | (col & 0xf);
}
constexpr std::uint64_t warehouse_of(Key k) { return (k >> 40) & 0xffff; }
constexpr Table table_of(Key k) { return static_cast<Table>(k >> 56); }

}  // namespace tpcc

}  // namespace ncc
