#include <gtest/gtest.h>

#include "harness.hpp"
#include "ncc/checker.hpp"
#include "ncc/ncc_client.hpp"
#include "ncc/ncc_server.hpp"

namespace ncc {
namespace {

using test::Cluster;
using test::program;
using test::rd;
using test::wr;

NccClient standalone(ClientId id) {
  ClientConfig cc;
  cc.client_id = id;
  return NccClient(cc, {}, [](Key) { return NodeId{0}; });
}

TEST(NccClient, AsynchronyAwareTimestampUsesLargestDelta) {
  auto c1 = standalone(1);
  c1.set_t_delta(0, 0);
  c1.set_t_delta(1, 10);
  EXPECT_EQ(c1.asynchrony_aware_ts(1004, {0, 1}), Timestamp({1014, 1}));
  auto c2 = standalone(2);
  c2.set_t_delta(0, 0);
  c2.set_t_delta(1, 5);
  EXPECT_EQ(c2.asynchrony_aware_ts(1005, {0, 1}), Timestamp({1010, 2}));
}

TEST(NccClient, NoProfilesMeansNoAdjustment) {
  auto c = standalone(4);
  EXPECT_EQ(c.asynchrony_aware_ts(777, {0, 3}), Timestamp({777, 4}));
}

TEST(NccClient, DeltaIsServerTimeMinusSendTime) {
  auto c = standalone(1);
  c.update_t_delta(0, 990, 1000);
  EXPECT_DOUBLE_EQ(c.profiles().at(0).t_delta, 10);
  c.update_t_delta(0, 2000, 2010);
  EXPECT_DOUBLE_EQ(c.profiles().at(0).t_delta, 10);
}

TEST(NccClient, DeltaMayGoNegative) {
  auto c = standalone(1);
  c.update_t_delta(0, 1000, 990);
  EXPECT_DOUBLE_EQ(c.profiles().at(0).t_delta, -10);
  c.update_t_delta(0, 1000, 1040);
  EXPECT_DOUBLE_EQ(c.profiles().at(0).t_delta, 0.8 * -10 + 0.2 * 40);
}

TEST(Safeguard, Examples) {
  auto a = safeguard_check({{{1004, 1}, {1004, 1}}, {{1006, 2}, {1006, 2}}});
  EXPECT_FALSE(a.ok);
  EXPECT_EQ(a.t_prime, Timestamp({1006, 2}));
  auto b = safeguard_check({{{0, 0}, {4, 0}}, {{6, 0}, {6, 0}}});
  EXPECT_FALSE(b.ok);
  EXPECT_EQ(b.t_prime.physical, 6);
  auto c = safeguard_check({{{5, 0}, {10, 0}}, {{7, 0}, {9, 0}}, {{6, 0}, {8, 0}}});
  EXPECT_TRUE(c.ok);
  EXPECT_EQ(c.t_prime.physical, 7);
  EXPECT_FALSE(safeguard_check({}).ok);
}

TEST(NccClient, UncontendedReadWriteCommitsInTwoRounds) {
  Cluster c(Protocol::ncc, 2, 1);
  auto out = c.submit(0, 100, program({rd(0), wr(1)}));
  EXPECT_EQ(c.run(), RunStatus::quiescent);
  ASSERT_TRUE(out->has_value());
  EXPECT_TRUE((*out)->committed);
  EXPECT_EQ((*out)->rounds, 2);
  EXPECT_EQ((*out)->attempts, 1u);
  EXPECT_EQ(c.sim().messages_of(MsgKind::ExecuteReq), 2u);
  EXPECT_EQ(c.sim().messages_of(MsgKind::CommitAbort), 2u);
  EXPECT_EQ(c.sim().messages_of(MsgKind::SmartRetryReq), 0u);
}

TEST(NccClient, ReadOnlyCommitsInOneRoundWithoutCommitMessages) {
  Cluster c(Protocol::ncc, 2, 1);
  auto out = c.submit(0, 100, program({rd(0), rd(1)}, true));
  c.run();
  ASSERT_TRUE(out->has_value());
  EXPECT_TRUE((*out)->committed);
  EXPECT_EQ((*out)->rounds, 1);
  EXPECT_EQ(c.sim().messages_of(MsgKind::CommitAbort), 0u);
}

TEST(NccClient, ReadOnlyAfterUnseenWriteAbortsThenSucceeds) {
  Cluster c(Protocol::ncc, 1, 2);
  auto w = c.submit(0, 100, program({wr(0)}));
  auto r = c.submit(1, 1000, program({rd(0)}, true));
  c.run();
  ASSERT_TRUE(w->has_value() && r->has_value());
  EXPECT_TRUE((*r)->committed);
  EXPECT_EQ((*r)->attempts, 2u);
  EXPECT_EQ((*r)->results[0].version, (*w)->tx);
  EXPECT_EQ(c.sim().messages_of(MsgKind::RoAbortResp), 1u);
}

TEST(NccClient, ReadOnlyVariantOffSendsCommits) {
  Cluster c(Protocol::ncc_rw, 1, 1);
  auto out = c.submit(0, 100, program({rd(0)}, true));
  c.run();
  ASSERT_TRUE(out->has_value());
  EXPECT_EQ((*out)->rounds, 2);
  EXPECT_EQ(c.sim().messages_of(MsgKind::CommitAbort), 1u);
}

TEST(NccClient, MultiShotSeesEarlierValues) {
  Cluster c(Protocol::ncc, 2, 1);
  TxProgram p = program({rd(0)});
  p.num_shots = 2;
  p.next = [](std::uint16_t, const std::vector<OpResult>& so_far) {
    return std::vector<Op>{wr(1 + 2 * (so_far.at(0).value.digest % 5))};
  };
  auto out = c.submit(0, 100, p);
  c.run();
  ASSERT_TRUE(out->has_value());
  EXPECT_TRUE((*out)->committed);
  EXPECT_EQ((*out)->results.size(), 2u);
  EXPECT_EQ((*out)->rounds, 3);
}

TEST(NccClient, ConflictingWritersStaySerializable) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Cluster c(Protocol::ncc, 2, 4, 50, seed);
    std::vector<std::shared_ptr<std::optional<TxOutcome>>> outs;
    for (std::uint32_t cl = 0; cl < 4; ++cl) {
      for (int i = 0; i < 5; ++i) {
        outs.push_back(c.submit(cl, 100 + 37 * i + cl, program({rd(0), rd(1), wr(cl % 2), wr(2 + cl % 2)})));
      }
    }
    c.run();
    for (auto& o : outs) {
      ASSERT_TRUE(o->has_value());
      EXPECT_TRUE((*o)->committed);
    }
    auto res = check_trace(c.trace());
    EXPECT_EQ(res.verdict, Verdict::ok) << "seed " << seed << ": " << res.describe();
  }
}

// Sends one execute request and then goes silent.
class ScriptClient : public Node {
 public:
  void on_message(const Message& m) override { got.push_back(m); }
  void fire(const std::vector<std::pair<NodeId, Key>>& sends, std::vector<CohortEntry> cohorts) {
    for (auto [server, key] : sends) {
      Message m = test::exec_req({1000, 0}, {wr(key)});
      m.to = server;
      m.backup = 0;
      m.client = ctx_->self();
      m.cohorts = cohorts;
      ctx_->send(m);
    }
  }
  std::vector<Message> got;
};

struct RecoveryRig {
  RecoveryRig() : sim(cfg()) {
    NccServerConfig nc;
    nc.recovery_timeout = 10'000;
    a = std::make_unique<NccServer>(nc);
    b = std::make_unique<NccServer>(nc);
    sim.add_node(a.get(), NodeRole::server);
    sim.add_node(b.get(), NodeRole::server);
    sim.add_node(&client, NodeRole::client);
  }
  static SimConfig cfg() {
    SimConfig c;
    c.client_server = DelayModel::fixed(50);
    c.server_server = DelayModel::fixed(50);
    c.clock_skew = 0;
    return c;
  }
  Sim sim;
  std::unique_ptr<NccServer> a, b;
  ScriptClient client;
};

TEST(Recovery, MissingCohortRequestAborts) {
  RecoveryRig r;
  r.sim.at(100, [&] { r.client.fire({{0, 0}}, {{0, 1}, {1, 1}}); });
  EXPECT_EQ(r.sim.run(1'000'000), RunStatus::quiescent);
  EXPECT_EQ(r.a->decision_of({1000, 0}), Decision::aborted);
  EXPECT_EQ(r.a->stats().recoveries, 1u);
  EXPECT_EQ(r.a->versions(0).size(), 1u);
  auto res = check_trace(r.sim.trace().records());
  EXPECT_EQ(res.verdict, Verdict::ok);
  EXPECT_EQ(res.committed, 0u);
}

TEST(Recovery, OverlappingPairsCommitEverywhere) {
  RecoveryRig r;
  r.sim.at(100, [&] { r.client.fire({{0, 0}, {1, 1}}, {{0, 1}, {1, 1}}); });
  r.sim.run(1'000'000);
  EXPECT_EQ(r.a->decision_of({1000, 0}), Decision::committed);
  EXPECT_EQ(r.b->decision_of({1000, 0}), Decision::committed);
  EXPECT_EQ(r.a->versions(0).back().creator, TxId({1000, 0}));
  EXPECT_TRUE(r.a->versions(0).back().committed);
  EXPECT_TRUE(r.b->versions(1).back().committed);
}

TEST(Recovery, RepeatedQueriesGiveTheSameDecision) {
  RecoveryRig r;
  r.sim.at(100, [&] { r.client.fire({{0, 0}, {1, 1}}, {{0, 1}, {1, 1}}); });
  r.sim.run(1'000'000);
  Message q;
  q.kind = MsgKind::RecoverTrigger;
  q.to = 0;
  q.tx = {1000, 0};
  r.sim.at(r.sim.now() + 10, [&] { r.b->ctx().send(q); });
  r.sim.run(2'000'000);
  EXPECT_EQ(r.a->decision_of({1000, 0}), Decision::committed);
  EXPECT_EQ(r.a->stats().conflicting_decisions, 0u);
  EXPECT_EQ(r.b->stats().conflicting_decisions, 0u);
}

}  // namespace
}  // namespace ncc
