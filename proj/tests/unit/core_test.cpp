#include <gtest/gtest.h>

#include <sstream>

#include "ncc/message.hpp"
#include "ncc/rng.hpp"
#include "ncc/timestamp.hpp"
#include "ncc/trace.hpp"

namespace ncc {
namespace {

TEST(Timestamp, TiesBrokenByClientId) {
  Timestamp a{100, 1};
  Timestamp b{100, 2};
  EXPECT_EQ(ts_compare(a, b), Ordering::less);
  EXPECT_EQ(ts_compare(b, a), Ordering::greater);
  EXPECT_EQ(ts_compare(a, a), Ordering::equal);
  EXPECT_LT(Timestamp({99, 7}), a);
}

TEST(Timestamp, ArithmeticKeepsClientId) {
  Timestamp t{5, 3};
  EXPECT_EQ(t.next(), Timestamp({6, 3}));
  EXPECT_EQ(t.plus(10), Timestamp({15, 3}));
}

TEST(Timestamp, TextRoundTrip) {
  for (Timestamp t : {Timestamp{1004, 1}, Timestamp{0, kReservedClient}, Timestamp{-3, 0}}) {
    auto back = Timestamp::parse(t.str());
    ASSERT_TRUE(back.has_value()) << t.str();
    EXPECT_EQ(*back, t);
  }
  EXPECT_EQ(Timestamp({1004, 3}).str(), "1004.3");
  EXPECT_FALSE(Timestamp::parse("1004").has_value());
  EXPECT_FALSE(Timestamp::parse("a.b").has_value());
  EXPECT_FALSE(Timestamp::parse("12.").has_value());
}

TEST(Timestamp, InitialVersionSortsFirst) {
  EXPECT_LT(kInitTx, Timestamp({1, 0}));
}

TEST(Message, EncodeDecodeRoundTrip) {
  Message m;
  m.kind = MsgKind::ExecuteResp;
  m.from = 3;
  m.to = 7;
  m.tx = {1014, 1};
  m.ts = {1014, 1};
  m.shot = 1;
  m.round = 2;
  m.read_only = true;
  m.last_shot = true;
  m.ok = false;
  m.decision = Decision::committed;
  m.backup = 0;
  m.client = 7;
  m.t_c = 1000;
  m.t_s = 1010;
  m.token = {{900, 2}, 42};
  m.sr = SrState::success;
  m.executed = 3;
  m.ops = {{5, OpKind::write, {99, 1600}, {}}, {6, OpKind::read, {}, {4, 4}}};
  m.results = {{5, OpKind::write, {99, 1600}, {1014, 1}, {{1014, 1}, {1014, 1}}, true}};
  m.cohorts = {{0, 2}, {1, 1}};
  auto back = decode(encode(m));
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, m);
}

TEST(Message, DecodeRejectsGarbage) {
  EXPECT_FALSE(decode("not json").has_value());
  EXPECT_FALSE(decode(R"({"kind":"NoSuchKind"})").has_value());
}

TEST(Message, KindNamesRoundTrip) {
  for (int k = 0; k < kMsgKindCount; ++k) {
    auto kind = static_cast<MsgKind>(k);
    EXPECT_EQ(msg_kind_from(to_string(kind)), kind);
  }
}

TEST(Trace, LineRoundTrip) {
  TraceRecord r{1234, 5, TraceKind::read, {1000, 2}, 77, {900, 1}, {901, 1}, 0xdeadbeefULL, 3};
  auto back = parse_line(to_line(r));
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, r);
  EXPECT_FALSE(parse_line("{}").has_value());
}

TEST(Trace, ReadReportsFirstBadLine) {
  TraceRecord r{1, 0, TraceKind::tx_begin, {1, 0}};
  std::stringstream ss;
  ss << to_line(r) << "\n" << to_line(r) << "\nbroken\n";
  auto res = read_trace(ss);
  EXPECT_EQ(res.bad_line, 3u);
}

TEST(Trace, FingerprintSeesEveryField) {
  std::vector<TraceRecord> a{{1, 0, TraceKind::write, {1, 0}, 5, {1, 0}, {1, 0}, 9, 0}};
  auto b = a;
  b[0].digest = 10;
  EXPECT_NE(trace_fingerprint(a), trace_fingerprint(b));
  EXPECT_EQ(trace_fingerprint(a), trace_fingerprint(a));
}

TEST(Rng, DeriveIsStable) {
  auto a = Rng::derive(7, 3);
  auto b = Rng::derive(7, 3);
  auto c = Rng::derive(7, 4);
  auto x = a.next();
  EXPECT_EQ(x, b.next());
  EXPECT_NE(x, c.next());
}

TEST(Rng, UniformIntStaysInRange) {
  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    auto v = r.uniform_int(-3, 4);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 4);
  }
}

TEST(Protocol, NamesRoundTrip) {
  for (auto p : {Protocol::ncc, Protocol::ncc_rw, Protocol::docc, Protocol::d2pl_nw, Protocol::d2pl_ww, Protocol::mvto}) {
    EXPECT_EQ(protocol_from(to_string(p)), p);
  }
  EXPECT_FALSE(protocol_from("tapir").has_value());
}

}  // namespace
}  // namespace ncc
