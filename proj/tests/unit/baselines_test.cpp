#include <gtest/gtest.h>

#include <set>

#include "harness.hpp"
#include "ncc/checker.hpp"
#include "ncc/d2pl.hpp"
#include "ncc/docc.hpp"
#include "ncc/lock_table.hpp"
#include "ncc/mvto.hpp"

namespace ncc {
namespace {

using test::Cluster;
using test::decision_msg;
using test::exec_req;
using test::FakeContext;
using test::program;
using test::rd;
using test::wr;

int uncontended_rounds(Protocol p) {
  Cluster c(p, 2, 1);
  auto out = c.submit(0, 100, program({rd(0), wr(1)}));
  c.run();
  EXPECT_TRUE(out->has_value());
  if (!out->has_value()) return -1;
  EXPECT_TRUE((*out)->committed);
  return (*out)->rounds;
}

TEST(Baselines, UncontendedRoundCounts) {
  EXPECT_EQ(uncontended_rounds(Protocol::docc), 3);
  EXPECT_EQ(uncontended_rounds(Protocol::d2pl_nw), 2);
  EXPECT_EQ(uncontended_rounds(Protocol::d2pl_ww), 3);
  EXPECT_EQ(uncontended_rounds(Protocol::mvto), 2);
}

TEST(Baselines, ContendedRunsStaySerializable) {
  for (auto p : {Protocol::docc, Protocol::d2pl_nw, Protocol::d2pl_ww, Protocol::mvto}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Cluster c(p, 2, 4, 50, seed);
      std::vector<std::shared_ptr<std::optional<TxOutcome>>> outs;
      for (std::uint32_t cl = 0; cl < 4; ++cl) {
        for (int i = 0; i < 5; ++i) {
          outs.push_back(c.submit(cl, 100 + 41 * i + cl, program({rd(0), rd(1), wr(cl % 2), wr(2 + cl % 2)})));
        }
      }
      c.run();
      for (auto& o : outs) ASSERT_TRUE(o->has_value()) << to_string(p);
      auto res = check_trace(c.trace());
      EXPECT_EQ(res.verdict, Verdict::ok) << to_string(p) << " seed " << seed << ": " << res.describe();
    }
  }
}

TEST(LockTable, SharedLocksCoexist) {
  LockTable t;
  EXPECT_TRUE(t.try_acquire(1, {1, 0}, LockMode::shared, {1, 0}));
  EXPECT_TRUE(t.try_acquire(1, {2, 0}, LockMode::shared, {2, 0}));
  EXPECT_FALSE(t.try_acquire(1, {3, 0}, LockMode::exclusive, {3, 0}));
  EXPECT_EQ(t.conflicts(1, {3, 0}, LockMode::exclusive).size(), 2u);
  EXPECT_TRUE(t.conflicts(1, {3, 0}, LockMode::shared).empty());
}

TEST(LockTable, SoleReaderUpgrades) {
  LockTable t;
  EXPECT_TRUE(t.try_acquire(1, {1, 0}, LockMode::shared, {1, 0}));
  EXPECT_TRUE(t.try_acquire(1, {1, 0}, LockMode::exclusive, {1, 0}));
  EXPECT_TRUE(t.holds(1, {1, 0}, LockMode::exclusive));
  EXPECT_FALSE(t.try_acquire(1, {2, 0}, LockMode::shared, {2, 0}));
}

TEST(LockTable, ReleaseGrantsWaitersInTimestampOrder) {
  LockTable t;
  ASSERT_TRUE(t.try_acquire(1, {1, 0}, LockMode::exclusive, {1, 0}));
  t.enqueue(1, {5, 0}, LockMode::exclusive, {5, 0});
  t.enqueue(1, {3, 0}, LockMode::shared, {3, 0});
  t.enqueue(1, {4, 0}, LockMode::shared, {4, 0});
  EXPECT_EQ(t.waiting(1), 3u);
  auto g = t.release_all({1, 0});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].tx, TxId({3, 0}));
  EXPECT_EQ(g[1].tx, TxId({4, 0}));
  g = t.release_all({3, 0});
  EXPECT_TRUE(g.empty());
  g = t.release_all({4, 0});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].tx, TxId({5, 0}));
  t.release_all({5, 0});
  EXPECT_EQ(t.locked_keys(), 0u);
}

TEST(LockTable, NewcomerDoesNotJumpOlderWaiter) {
  LockTable t;
  ASSERT_TRUE(t.try_acquire(1, {1, 0}, LockMode::shared, {1, 0}));
  t.enqueue(1, {2, 0}, LockMode::exclusive, {2, 0});
  EXPECT_FALSE(t.try_acquire(1, {3, 0}, LockMode::shared, {3, 0}));
  EXPECT_TRUE(t.try_acquire(1, {0, 5}, LockMode::shared, {0, 5}));
}

struct D2plRig {
  explicit D2plRig(bool ww) : s(ww) { s.bind(&ctx); }
  D2plRig(const D2plRig& o) : ctx(o.ctx), s(o.s) { s.bind(&ctx); }
  D2plRig& operator=(const D2plRig&) = delete;

  FakeContext ctx;
  D2plServer s;
};

TEST(D2pl, NoWaitAbortsOnConflict) {
  D2plRig r(false);
  r.s.on_message(exec_req({1, 0}, {wr(1)}, 10));
  r.s.on_message(exec_req({2, 0}, {rd(1)}, 11));
  auto resp = r.ctx.of_kind(MsgKind::ExecuteResp);
  ASSERT_EQ(resp.size(), 2u);
  EXPECT_TRUE(resp[0].ok);
  EXPECT_FALSE(resp[1].ok);
  EXPECT_EQ(resp[1].to, 11u);
  EXPECT_FALSE(r.s.locks().holds(1, {2, 0}, LockMode::shared));
}

TEST(D2pl, OlderRequesterWoundsYoungerHolder) {
  D2plRig r(true);
  r.s.on_message(exec_req({5, 0}, {wr(1)}, 10));
  r.ctx.take();
  r.s.on_message(exec_req({2, 0}, {wr(1)}, 11));
  auto wounds = r.ctx.of_kind(MsgKind::Wound);
  ASSERT_EQ(wounds.size(), 1u);
  EXPECT_EQ(wounds[0].tx, TxId({5, 0}));
  EXPECT_EQ(wounds[0].to, 10u);
  auto resp = r.ctx.of_kind(MsgKind::ExecuteResp);
  ASSERT_EQ(resp.size(), 1u);
  EXPECT_EQ(resp[0].tx, TxId({2, 0}));
  EXPECT_TRUE(resp[0].ok);
  EXPECT_TRUE(r.s.locks().holds(1, {2, 0}, LockMode::exclusive));
}

TEST(D2pl, YoungerRequesterWaits) {
  D2plRig r(true);
  r.s.on_message(exec_req({2, 0}, {wr(1)}, 10));
  r.ctx.take();
  r.s.on_message(exec_req({5, 0}, {wr(1)}, 11));
  EXPECT_TRUE(r.ctx.sent.empty());
  EXPECT_EQ(r.s.locks().waiting(1), 1u);
  r.s.on_message(decision_msg({2, 0}, Decision::committed, 10));
  auto resp = r.ctx.of_kind(MsgKind::ExecuteResp);
  ASSERT_EQ(resp.size(), 1u);
  EXPECT_EQ(resp[0].tx, TxId({5, 0}));
  EXPECT_TRUE(resp[0].ok);
}

TEST(D2pl, PreparedHolderIsNotWounded) {
  D2plRig r(true);
  r.s.on_message(exec_req({5, 0}, {wr(1)}, 10));
  Message p;
  p.kind = MsgKind::PrepareReq;
  p.from = 10;
  p.tx = {5, 0};
  r.s.on_message(p);
  r.ctx.take();
  r.s.on_message(exec_req({2, 0}, {wr(1)}, 11));
  EXPECT_TRUE(r.ctx.of_kind(MsgKind::Wound).empty());
  EXPECT_EQ(r.s.locks().waiting(1), 1u);
}

// Each transaction sends one lock request per shot, then prepares and commits
// once every shot has been granted. Explores every interleaving and checks
// that some transaction can always move until all have finished.
struct Script {
  TxId tx;
  std::vector<Op> shots;
};

enum class St { idle, waiting, granted, doomed, done };

struct World {
  explicit World(bool ww) : rig(ww) {}
  D2plRig rig;
  std::vector<St> st;
  std::vector<std::size_t> next;
};

void absorb(World& w, const std::vector<Script>& txs) {
  for (const auto& m : w.rig.ctx.take()) {
    for (std::size_t i = 0; i < txs.size(); ++i) {
      if (m.tx != txs[i].tx || w.st[i] == St::done) continue;
      if (m.kind == MsgKind::Wound || (m.kind == MsgKind::ExecuteResp && !m.ok)) {
        w.st[i] = St::doomed;
      } else if (m.kind == MsgKind::ExecuteResp && w.st[i] == St::waiting) {
        w.st[i] = St::granted;
      }
    }
  }
}

std::size_t explore(const World& w, const std::vector<Script>& txs, bool& stuck) {
  std::size_t leaves = 0;
  bool moved = false;
  for (std::size_t i = 0; i < txs.size() && !stuck; ++i) {
    World n = w;
    const NodeId client = static_cast<NodeId>(10 + i);
    switch (w.st[i]) {
      case St::idle:
      case St::granted:
        if (w.st[i] == St::granted && w.next[i] == txs[i].shots.size()) {
          Message p;
          p.kind = MsgKind::PrepareReq;
          p.from = client;
          p.tx = txs[i].tx;
          n.rig.s.on_message(p);
          bool ok = n.rig.ctx.of_kind(MsgKind::PrepareResp).at(0).ok;
          n.rig.ctx.take();
          n.rig.s.on_message(decision_msg(txs[i].tx, ok ? Decision::committed : Decision::aborted, client));
          n.st[i] = St::done;
        } else {
          auto m = exec_req(txs[i].tx, {txs[i].shots[w.next[i]]}, client, static_cast<std::uint16_t>(w.next[i]));
          n.st[i] = St::waiting;
          ++n.next[i];
          n.rig.s.on_message(m);
        }
        break;
      case St::doomed:
        n.rig.s.on_message(decision_msg(txs[i].tx, Decision::aborted, client));
        n.st[i] = St::done;
        break;
      default:
        continue;
    }
    moved = true;
    absorb(n, txs);
    leaves += explore(n, txs, stuck);
  }
  if (!moved) {
    for (auto s : w.st) {
      if (s != St::done) stuck = true;
    }
    return 1;
  }
  return leaves;
}

TEST(D2pl, WoundWaitNeverDeadlocks) {
  std::vector<std::vector<Script>> cases = {
      {{{1, 0}, {wr(1), wr(2)}}, {{2, 0}, {wr(2), wr(1)}}, {{3, 0}, {rd(1), wr(2)}}},
      {{{3, 0}, {wr(1), wr(2)}}, {{1, 0}, {wr(2), wr(3)}}, {{2, 0}, {wr(3), wr(1)}}},
      {{{2, 0}, {rd(1), wr(2)}}, {{1, 0}, {rd(2), wr(1)}}, {{3, 0}, {rd(1), rd(2)}}},
  };
  for (const auto& txs : cases) {
    World w(true);
    w.st.assign(txs.size(), St::idle);
    w.next.assign(txs.size(), 0);
    bool stuck = false;
    auto leaves = explore(w, txs, stuck);
    EXPECT_FALSE(stuck);
    EXPECT_GT(leaves, 1u);
  }
}

TEST(D2pl, NoWaitDeadlockIsImpossibleToo) {
  std::vector<Script> txs = {{{1, 0}, {wr(1), wr(2)}}, {{2, 0}, {wr(2), wr(1)}}, {{3, 0}, {wr(1), wr(2)}}};
  World w(false);
  w.st.assign(txs.size(), St::idle);
  w.next.assign(txs.size(), 0);
  bool stuck = false;
  explore(w, txs, stuck);
  EXPECT_FALSE(stuck);
}

struct MvtoRig {
  MvtoRig() { s.bind(&ctx); }
  FakeContext ctx;
  MvtoServer s;
};

TEST(Mvto, ReadBelowALaterWriteReturnsTheOlderVersion) {
  MvtoRig r;
  r.s.on_message(exec_req({10, 0}, {wr(1, 55)}));
  r.s.on_message(decision_msg({10, 0}, Decision::committed));
  r.ctx.take();
  auto m = exec_req({5, 1}, {rd(1)});
  m.read_only = true;
  r.s.on_message(m);
  auto resp = r.ctx.of_kind(MsgKind::ExecuteResp);
  ASSERT_EQ(resp.size(), 1u);
  EXPECT_TRUE(resp[0].ok);
  EXPECT_EQ(resp[0].results[0].version, kInitTx);
}

TEST(Mvto, WriteUnderALaterReadAborts) {
  MvtoRig r;
  r.s.on_message(exec_req({10, 0}, {rd(1)}));
  r.ctx.take();
  r.s.on_message(exec_req({5, 1}, {wr(1)}));
  auto resp = r.ctx.of_kind(MsgKind::ExecuteResp);
  ASSERT_EQ(resp.size(), 1u);
  EXPECT_FALSE(resp[0].ok);
  EXPECT_EQ(r.s.versions(1).size(), 1u);
}

TEST(Mvto, ReadOfUndecidedVersionWaits) {
  MvtoRig r;
  r.s.on_message(exec_req({5, 0}, {wr(1, 9)}));
  r.ctx.take();
  r.s.on_message(exec_req({7, 1}, {rd(1)}));
  EXPECT_TRUE(r.ctx.sent.empty());
  r.s.on_message(decision_msg({5, 0}, Decision::aborted));
  auto resp = r.ctx.of_kind(MsgKind::ExecuteResp);
  ASSERT_EQ(resp.size(), 1u);
  EXPECT_EQ(resp[0].results[0].version, kInitTx);
}

TEST(Mvto, ReadOnlyTransactionsNeverAbort) {
  Cluster c(Protocol::mvto, 2, 4, 50, 3);
  std::vector<std::shared_ptr<std::optional<TxOutcome>>> ro;
  for (std::uint32_t cl = 0; cl < 4; ++cl) {
    for (int i = 0; i < 8; ++i) {
      if (cl % 2 == 0) {
        c.submit(cl, 100 + 29 * i, program({wr(0), wr(1)}));
      } else {
        ro.push_back(c.submit(cl, 100 + 31 * i, program({rd(0), rd(1)}, true)));
      }
    }
  }
  c.run();
  for (auto& o : ro) {
    ASSERT_TRUE(o->has_value());
    EXPECT_TRUE((*o)->committed);
    EXPECT_EQ((*o)->attempts, 1u);
  }
}

}  // namespace
}  // namespace ncc
