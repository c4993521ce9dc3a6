#include "ncc/checker.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace ncc {

namespace {

struct Acc {
  HistoryTx tx;
  bool client_commit = false;
  bool backup_commit = false;
};

std::string err(const std::string& what, const TxId& tx) { return what + " (tx " + tx.str() + ")"; }

}  // namespace

HistoryBuild build_history(const std::vector<TraceRecord>& records) {
  HistoryBuild out;
  std::unordered_map<TxId, Acc, TimestampHash> acc;
  std::map<Key, std::vector<std::pair<Timestamp, TxId>>> writes;
  for (const auto& r : records) {
    switch (r.kind) {
      case TraceKind::tx_begin: {
        auto& a = acc[r.tx];
        a.tx.began = true;
        a.tx.start = std::min(a.tx.start, r.time);
        break;
      }
      case TraceKind::read: {
        if (r.version == r.tx) {
          out.error = err("read of own write on key " + std::to_string(r.key), r.tx);
          return out;
        }
        acc[r.tx].tx.reads.emplace_back(r.key, r.version);
        break;
      }
      case TraceKind::write:
        writes[r.key].emplace_back(r.order, r.tx);
        break;
      case TraceKind::commit: {
        auto& a = acc[r.tx];
        if (r.aux >= kBackupCommitFlag) {
          a.backup_commit = true;
        } else {
          a.client_commit = true;
          a.tx.end = std::min(a.tx.end, r.time);
        }
        break;
      }
      case TraceKind::abort:
        acc[r.tx].tx.aborted = true;
        break;
      default:
        break;
    }
  }

  std::vector<TxId> ids;
  ids.reserve(acc.size());
  History h;
  for (auto& [id, a] : acc) {
    a.tx.id = id;
    auto& reads = a.tx.reads;
    std::sort(reads.begin(), reads.end());
    reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
    for (std::size_t i = 1; i < reads.size(); ++i) {
      if (reads[i].first == reads[i - 1].first) {
        out.error = err("key " + std::to_string(reads[i].first) + " read at two versions", id);
        return out;
      }
    }
    a.tx.committed = a.client_commit || a.backup_commit;
    if (a.tx.committed && a.tx.aborted) {
      out.error = err("transaction both committed and aborted", id);
      return out;
    }
    if (a.tx.committed && !a.tx.began) {
      out.error = err("committed transaction has no begin record", id);
      return out;
    }
    if (a.tx.committed) {
      ids.push_back(id);
    } else if (a.tx.aborted) {
      ++h.aborted;
    }
  }
  std::sort(ids.begin(), ids.end());
  std::unordered_map<TxId, std::size_t, TimestampHash> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    index[ids[i]] = i;
    h.txs.push_back(std::move(acc[ids[i]].tx));
  }

  std::map<std::pair<Key, TxId>, bool> created;
  for (auto& [key, list] : writes) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i].first == list[i - 1].first) {
        out.error = "key " + std::to_string(key) + " has two versions at order " + list[i].first.str();
        return out;
      }
      auto it = index.find(list[i].second);
      if (it == index.end()) {
        out.error = err("write on key " + std::to_string(key) + " by a transaction that never committed",
                        list[i].second);
        return out;
      }
      if (!created.emplace(std::make_pair(key, list[i].second), true).second) {
        out.error = err("key " + std::to_string(key) + " written twice", list[i].second);
        return out;
      }
      order.push_back(it->second);
      h.txs[it->second].writes.push_back(key);
    }
    h.versions.emplace_back(key, std::move(order));
  }
  for (const auto& t : h.txs) {
    for (const auto& [key, ver] : t.reads) {
      if (ver == kInitTx) continue;
      if (created.count({key, ver}) == 0) {
        out.error = err("read of unknown version " + ver.str() + " on key " + std::to_string(key), t.id);
        return out;
      }
    }
  }
  out.history = std::move(h);
  return out;
}

std::vector<Edge> execution_edges(const History& h) {
  struct Read {
    Key key;
    std::size_t pos;  // version position, 0 is the initial version
    std::size_t reader;
    bool operator<(const Read& o) const {
      return std::tie(key, pos, reader) < std::tie(o.key, o.pos, o.reader);
    }
  };
  auto tx_index = [&](const TxId& id) {
    auto it = std::lower_bound(h.txs.begin(), h.txs.end(), id, [](const HistoryTx& t, const TxId& v) { return t.id < v; });
    return static_cast<std::size_t>(it - h.txs.begin());
  };
  // h.versions is sorted by key.
  auto chain_of = [&](Key key) -> const std::vector<std::size_t>* {
    auto it = std::lower_bound(h.versions.begin(), h.versions.end(), key,
                               [](const auto& kv, Key k) { return kv.first < k; });
    return it != h.versions.end() && it->first == key ? &it->second : nullptr;
  };
  std::unordered_map<Key, std::unordered_map<std::size_t, std::size_t>> positions;
  for (const auto& [key, order] : h.versions) {
    auto& m = positions[key];
    for (std::size_t p = 0; p < order.size(); ++p) m.emplace(order[p], p + 1);
  }
  std::vector<Read> reads;
  for (std::size_t i = 0; i < h.txs.size(); ++i) {
    for (const auto& [key, ver] : h.txs[i].reads) {
      std::size_t pos = 0;
      if (ver != kInitTx) pos = positions.at(key).at(tx_index(ver));
      reads.push_back({key, pos, i});
    }
  }
  std::sort(reads.begin(), reads.end());

  std::vector<Edge> edges;
  static const std::vector<std::size_t> kEmpty;
  for (const auto& r : reads) {
    const auto* c = chain_of(r.key);
    const auto& order = c == nullptr ? kEmpty : *c;
    if (r.pos > 0 && order[r.pos - 1] != r.reader) edges.push_back({order[r.pos - 1], r.reader, EdgeKind::wr});
    if (r.pos < order.size() && order[r.pos] != r.reader) edges.push_back({r.reader, order[r.pos], EdgeKind::rw});
  }
  for (const auto& [key, order] : h.versions) {
    for (std::size_t p = 1; p < order.size(); ++p) {
      if (order[p - 1] != order[p]) edges.push_back({order[p - 1], order[p], EdgeKind::ww});
    }
  }
  return edges;
}

namespace {

struct Graph {
  std::vector<std::vector<std::size_t>> adj;
};

// Iterative Tarjan; component ids come out in reverse topological order.
std::vector<std::size_t> tarjan(const Graph& g, std::size_t& ncomp) {
  const std::size_t n = g.adj.size();
  constexpr std::size_t kUnset = SIZE_MAX;
  std::vector<std::size_t> idx(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;
  std::size_t counter = 0;
  ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (idx[s] != kUnset) continue;
    call.emplace_back(s, 0);
    idx[s] = low[s] = counter++;
    stack.push_back(s);
    on[s] = true;
    while (!call.empty()) {
      auto& [v, i] = call.back();
      if (i < g.adj[v].size()) {
        auto w = g.adj[v][i++];
        if (idx[w] == kUnset) {
          idx[w] = low[w] = counter++;
          stack.push_back(w);
          on[w] = true;
          call.emplace_back(w, 0);
        } else if (on[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      auto done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return comp;
}

// Shortest path from src to any node accepted by `goal`, following edges
// whose target passes `allow`. Returns the node sequence, or empty.
template <typename Goal, typename Allow>
std::vector<std::size_t> bfs(const Graph& g, std::size_t src, Goal goal, Allow allow, bool skip_src_goal) {
  std::vector<std::size_t> parent(g.adj.size(), SIZE_MAX);
  std::vector<bool> seen(g.adj.size(), false);
  std::deque<std::size_t> q{src};
  seen[src] = true;
  while (!q.empty()) {
    auto v = q.front();
    q.pop_front();
    for (auto w : g.adj[v]) {
      if (goal(w) && !(skip_src_goal && w == src && false)) {
        std::vector<std::size_t> path{w};
        for (auto x = v; x != SIZE_MAX; x = parent[x]) path.push_back(x);
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (seen[w] || !allow(w)) continue;
      seen[w] = true;
      parent[w] = v;
      q.push_back(w);
    }
  }
  return {};
}

}  // namespace

CheckResult check_history(const History& h, const CheckOptions& opt) {
  CheckResult res;
  res.committed = h.txs.size();
  res.aborted = h.aborted;
  const auto edges = execution_edges(h);
  res.edges = edges.size();
  Graph g;
  g.adj.resize(h.txs.size());
  for (const auto& e : edges) g.adj[e.from].push_back(e.to);
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::size_t ncomp = 0;
  auto comp = tarjan(g, ncomp);

  std::vector<std::size_t> size(ncomp, 0);
  for (auto c : comp) ++size[c];
  for (std::size_t v = 0; v < h.txs.size(); ++v) {
    if (size[comp[v]] < 2) continue;
    res.total_order = false;
    auto c = comp[v];
    auto path = bfs(
        g, v, [&](std::size_t w) { return w == v; }, [&](std::size_t w) { return comp[w] == c; }, true);
    path.pop_back();  // drop the repeated start
    for (auto x : path) res.cycle.push_back(h.txs[x].id);
    break;
  }

  // Minimum completion time reachable from each component (itself included).
  std::vector<std::int64_t> min_end(ncomp, INT64_MAX);
  std::vector<std::vector<std::size_t>> members(ncomp);
  for (std::size_t v = 0; v < h.txs.size(); ++v) {
    members[comp[v]].push_back(v);
    min_end[comp[v]] = std::min(min_end[comp[v]], h.txs[v].end);
  }
  for (std::size_t c = 0; c < ncomp; ++c) {
    for (auto v : members[c]) {
      for (auto w : g.adj[v]) {
        if (comp[w] != c) min_end[c] = std::min(min_end[c], min_end[comp[w]]);
      }
    }
  }
  for (std::size_t v = 0; v < h.txs.size(); ++v) {
    const auto start = h.txs[v].start;
    if (min_end[comp[v]] >= start) continue;
    auto path = bfs(
        g, v, [&](std::size_t w) { return h.txs[w].end < start; }, [](std::size_t) { return true; }, false);
    if (path.empty()) continue;
    res.real_time = false;
    for (auto x : path) res.inversion.push_back(h.txs[x].id);
    break;
  }

  res.verdict = res.total_order && res.real_time ? Verdict::ok : Verdict::violation;
  if (opt.oracle && h.txs.size() <= opt.oracle_max) res.oracle = brute_force_oracle(h);
  return res;
}

CheckResult check_trace(const std::vector<TraceRecord>& records, const CheckOptions& opt) {
  auto built = build_history(records);
  if (!built.history) {
    CheckResult res;
    res.verdict = Verdict::malformed;
    res.error = built.error;
    return res;
  }
  return check_history(*built.history, opt);
}

std::string CheckResult::describe() const {
  std::ostringstream os;
  switch (verdict) {
    case Verdict::ok:
      os << "ok: " << committed << " committed, " << aborted << " aborted, " << edges << " execution edges";
      break;
    case Verdict::malformed:
      os << "malformed: " << error;
      break;
    case Verdict::violation:
      os << "violation:";
      if (!total_order) {
        os << " execution cycle";
        for (const auto& t : cycle) os << ' ' << t.str();
        if (!cycle.empty()) os << ' ' << cycle.front().str();
        os << ';';
      }
      if (!real_time) {
        os << " real-time inversion, path";
        for (const auto& t : inversion) os << ' ' << t.str();
        if (inversion.size() >= 2) {
          os << " but " << inversion.back().str() << " finished before " << inversion.front().str() << " began";
        }
      }
      break;
  }
  if (oracle) os << " [oracle: " << (*oracle ? "ok" : "violation") << ']';
  return os.str();
}

bool brute_force_oracle(const History& h) {
  const std::size_t n = h.txs.size();
  if (n == 0) return true;
  if (n > 20) return false;
  using Mask = std::uint32_t;
  std::unordered_map<TxId, std::size_t, TimestampHash> index;
  for (std::size_t i = 0; i < n; ++i) index[h.txs[i].id] = i;

  std::vector<Mask> before(n, 0);  // must already be placed
  std::vector<std::vector<std::pair<Mask, Mask>>> reads(n);  // (must be placed, must not be placed)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && h.txs[j].end < h.txs[i].start) before[i] |= Mask{1} << j;
    }
  }
  std::map<Key, const std::vector<std::size_t>*> chains;
  for (const auto& [key, order] : h.versions) {
    chains[key] = &order;
    for (std::size_t p = 0; p < order.size(); ++p) {
      for (std::size_t q = 0; q < p; ++q) before[order[p]] |= Mask{1} << order[q];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [key, ver] : h.txs[i].reads) {
      auto cit = chains.find(key);
      if (ver == kInitTx) {
        Mask forbid = 0;
        if (cit != chains.end() && !cit->second->empty()) forbid = Mask{1} << cit->second->front();
        reads[i].emplace_back(0, forbid);
        continue;
      }
      auto w = index.at(ver);
      Mask forbid = 0;
      const auto& order = *cit->second;
      auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), w) - order.begin());
      if (pos + 1 < order.size()) forbid = Mask{1} << order[pos + 1];
      reads[i].emplace_back(Mask{1} << w, forbid);
    }
  }
  std::vector<bool> reach(std::size_t{1} << n, false);
  reach[0] = true;
  for (Mask m = 0; m < (Mask{1} << n); ++m) {
    if (!reach[m]) continue;
    for (std::size_t i = 0; i < n; ++i) {
      Mask bit = Mask{1} << i;
      if ((m & bit) != 0 || (before[i] & ~m) != 0) continue;
      bool ok = true;
      for (const auto& [need, forbid] : reads[i]) {
        if ((m & need) != need || (m & forbid) != 0) {
          ok = false;
          break;
        }
      }
      if (ok) reach[m | bit] = true;
    }
  }
  return reach[(Mask{1} << n) - 1];
}

std::vector<TraceRecord> random_history(Rng& rng, std::size_t max_tx, std::size_t keys) {
  const auto n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_tx)));
  struct Gen {
    TxId id;
    std::int64_t start;
    std::int64_t end;
    bool backup;
    std::vector<Key> reads;
    std::vector<Key> writes;
  };
  std::vector<Gen> txs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = txs[i];
    t.id = {static_cast<std::int64_t>(100 + i), static_cast<ClientId>(rng.uniform_int(0, 3))};
    t.start = rng.uniform_int(0, 60);
    t.end = t.start + rng.uniform_int(0, 30);
    t.backup = rng.bernoulli(0.05);
    for (Key k = 0; k < keys; ++k) {
      auto r = rng.uniform_int(0, 3);
      if (r == 1 || r == 3) t.reads.push_back(k);
      if (r == 2 || r == 3) t.writes.push_back(k);
    }
  }
  // A serial order, usually by start time so that many histories are valid.
  std::vector<std::size_t> serial(n);
  for (std::size_t i = 0; i < n; ++i) serial[i] = i;
  if (rng.bernoulli(0.7)) {
    std::sort(serial.begin(), serial.end(), [&](auto a, auto b) { return txs[a].start < txs[b].start; });
  } else {
    for (std::size_t i = n; i > 1; --i) std::swap(serial[i - 1], serial[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
  }
  std::vector<TraceRecord> out;
  std::map<Key, std::vector<std::size_t>> order;
  std::map<std::size_t, std::vector<std::pair<Key, TxId>>> observed;
  std::map<Key, TxId> latest;
  for (auto i : serial) {
    for (auto k : txs[i].reads) {
      auto it = latest.find(k);
      observed[i].emplace_back(k, it == latest.end() ? kInitTx : it->second);
    }
    for (auto k : txs[i].writes) {
      order[k].push_back(i);
      latest[k] = txs[i].id;
    }
  }
  // Perturbations that may or may not break the history.
  if (rng.bernoulli(0.3) && !observed.empty()) {
    auto it = observed.begin();
    std::advance(it, rng.uniform_int(0, static_cast<std::int64_t>(observed.size()) - 1));
    auto& reads = it->second;
    if (!reads.empty()) {
      auto& rd = reads[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(reads.size()) - 1))];
      std::vector<TxId> options{kInitTx};
      for (auto w : order[rd.first]) {
        if (w != it->first) options.push_back(txs[w].id);
      }
      rd.second = options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
    }
  }
  if (rng.bernoulli(0.3) && !order.empty()) {
    auto it = order.begin();
    std::advance(it, rng.uniform_int(0, static_cast<std::int64_t>(order.size()) - 1));
    auto& o = it->second;
    if (o.size() >= 2) {
      auto a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(o.size()) - 1));
      auto b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(o.size()) - 1));
      std::swap(o[a], o[b]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = txs[i];
    out.push_back({t.start, 0, TraceKind::tx_begin, t.id});
    for (const auto& [k, v] : observed[i]) out.push_back({t.end, 0, TraceKind::read, t.id, k, v, {}, 0});
    out.push_back({t.end, 0, TraceKind::commit, t.id, 0, {}, {}, 0, t.backup ? kBackupCommitFlag : 2});
  }
  for (const auto& [k, o] : order) {
    for (std::size_t p = 0; p < o.size(); ++p) {
      out.push_back({txs[o[p]].end, 1, TraceKind::write, txs[o[p]].id, k, txs[o[p]].id,
                     Timestamp{static_cast<std::int64_t>(p + 1), 0}, 0});
    }
  }
  return out;
}

}  // namespace ncc
