#include <gtest/gtest.h>

#include <regex>
#include <string>
#include <vector>

#include "capspace/simnet.hpp"

using namespace capspace;

namespace {

NodeId N(std::uint32_t n) { return NodeId{n}; }

LinkModel fixed(Millis ms, double drop = 0.0) { return LinkModel{LatencyModel::fixed(ms), drop}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ValidationError;
}

}  // namespace

TEST(Simnet, FixedLatencyDeliversAtSendPlusLatency) {
  Simulator sim(2, fixed(7), 1);
  Millis delivered = -1;
  sim.schedule_timer(N(0), "kick", 3, [&] { sim.send(N(0), N(1), "hello", [&] { delivered = sim.now(); }); });
  sim.run_until(100);
  EXPECT_EQ(delivered, 10);
}

TEST(Simnet, SelfSendIsImmediate) {
  Simulator sim(1, fixed(7), 1);
  Millis delivered = -1;
  sim.send(N(0), N(0), "self", [&] { delivered = sim.now(); });
  sim.run_until(0);
  EXPECT_EQ(delivered, 0);
}

TEST(Simnet, UniformLatencyStaysInBoundsAndCoversThem) {
  Simulator sim(2, LinkModel{LatencyModel::uniform(3, 6), 0.0}, 9);
  std::set<Millis> seen;
  for (int i = 0; i < 400; ++i) {
    auto ev = sim.send(N(0), N(1), "m", [] {});
    ASSERT_TRUE(ev);
    seen.insert(ev->time);
  }
  EXPECT_EQ(seen, (std::set<Millis>{3, 4, 5, 6}));
}

TEST(Simnet, EventsRunInTimeThenSequenceOrder) {
  Simulator sim(1, fixed(1), 1);
  std::vector<int> order;
  sim.schedule_timer(N(0), "b", 5, [&] { order.push_back(2); });
  sim.schedule_timer(N(0), "a", 5, [&] { order.push_back(3); });
  sim.schedule_timer(N(0), "c", 1, [&] { order.push_back(1); });
  sim.run_until(4);
  EXPECT_EQ(order, (std::vector<int>{1}));
  EXPECT_EQ(sim.now(), 4);
  sim.run_until(5);
  EXPECT_EQ(order, (std::vector<int>{1, 2, 3}));
}

TEST(Simnet, PartitionBlocksCrossGroupTrafficUntilHeal) {
  Simulator sim(3, fixed(2), 1);
  sim.set_partition(PartitionConfig{{{N(0)}, {N(1), N(2)}}}, 10);
  sim.heal(20);
  int delivered = 0;
  auto send_at = [&](Millis t, NodeId from, NodeId to) {
    sim.schedule_timer(from, "s", t, [&, from, to] { sim.send(from, to, "m", [&] { ++delivered; }); });
  };
  send_at(5, N(0), N(1));   // before the partition
  send_at(12, N(0), N(1));  // across groups: lost
  send_at(12, N(1), N(2));  // same group: delivered
  send_at(25, N(1), N(0));  // after heal
  sim.run_until(100);
  EXPECT_EQ(delivered, 3);
  EXPECT_EQ(sim.messages_sent(), 4u);
  auto trace = sim.render_trace();
  EXPECT_NE(trace.find("kind=drop node=1 detail=from=0 sent=12 m lost=partition"), std::string::npos) << trace;
}

TEST(Simnet, MessagesInFlightSurviveALaterPartition) {
  Simulator sim(2, fixed(10), 1);
  bool delivered = false;
  sim.send(N(0), N(1), "m", [&] { delivered = true; });
  sim.set_partition(PartitionConfig{{{N(0)}, {N(1)}}}, 5);
  sim.run_until(50);
  EXPECT_TRUE(delivered);
}

TEST(Simnet, CrashedDestinationLosesInFlightMessages) {
  Simulator sim(2, fixed(10), 1);
  bool delivered = false;
  sim.send(N(0), N(1), "m", [&] { delivered = true; });
  sim.set_node_status(N(1), false, 5);
  sim.run_until(50);
  EXPECT_FALSE(delivered);
  EXPECT_NE(sim.render_trace().find("kind=drop node=1 detail=from=0 sent=0 m lost=down"), std::string::npos);
  sim.set_node_status(N(1), true, 60);
  sim.run_until(60);
  EXPECT_TRUE(sim.is_up(N(1)));
}

TEST(Simnet, DropProbabilityExtremes) {
  Simulator never(2, fixed(1, 0.0), 3), always(2, fixed(1, 1.0), 3);
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(never.send(N(0), N(1), "m", [] {}));
    EXPECT_FALSE(always.send(N(0), N(1), "m", [] {}));
  }
}

TEST(Simnet, DropRateMatchesProbability) {
  Simulator sim(2, fixed(1, 0.25), 42);
  int lost = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) lost += sim.send(N(0), N(1), "m", [] {}) ? 0 : 1;
  // Binomial(20000, 0.25): sd ~61, so +-400 is well over six sd.
  EXPECT_NEAR(lost, n / 4, 400);
}

TEST(Simnet, LinkOverridesAreSymmetric) {
  Simulator sim(3, fixed(1), 1);
  sim.set_link(N(2), N(0), fixed(9));
  EXPECT_EQ(sim.link(N(0), N(2)).latency, LatencyModel::fixed(9));
  EXPECT_EQ(sim.link(N(0), N(1)).latency, LatencyModel::fixed(1));
  EXPECT_EQ(sim.max_latency(), 9);
}

TEST(Simnet, Validation) {
  Simulator sim(3, fixed(1), 1);
  EXPECT_EQ(code_of([&] { sim.set_partition(PartitionConfig{{{N(0), N(1)}, {N(1), N(2)}}}, 0); }),
            ErrorCode::OverlappingGroups);
  EXPECT_EQ(code_of([&] { sim.set_partition(PartitionConfig{{{N(0)}, {N(1)}}}, 0); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { sim.send(N(0), N(7), "m", [] {}); }), ErrorCode::InvalidNode);
  EXPECT_EQ(code_of([] { Simulator(2, LinkModel{LatencyModel::uniform(5, 2), 0.0}, 1); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([] { Simulator(2, fixed(1, 1.5), 1); }), ErrorCode::ValidationError);
}

TEST(Simnet, TraceLinesFollowTheFormat) {
  Simulator sim(3, LinkModel{LatencyModel::uniform(1, 4), 0.3}, 5);
  for (int i = 0; i < 20; ++i) {
    sim.schedule_timer(N(i % 3), "tick", i, [&sim, i] { sim.send(N(i % 3), N((i + 1) % 3), "ping", [] {}); });
  }
  sim.set_node_status(N(2), false, 7);
  sim.run_until(100);
  const std::regex line(R"(t=\d+ seq=\d+ kind=(deliver|drop|timer|fault|workload) node=\d+ detail=.*)");
  ASSERT_FALSE(sim.trace().empty());
  for (const auto& l : sim.trace()) EXPECT_TRUE(std::regex_match(l, line)) << l;
}

TEST(Simnet, SameSeedSameTrace) {
  auto run = [](std::uint64_t seed) {
    Simulator sim(4, LinkModel{LatencyModel::uniform(1, 20), 0.2}, seed);
    for (int i = 0; i < 50; ++i) {
      sim.schedule_timer(N(i % 4), "t", i, [&sim, i] { sim.send(N(i % 4), N((i * 7 + 1) % 4), "x", [] {}); });
    }
    sim.run_until(500);
    return sim.render_trace();
  };
  EXPECT_EQ(run(11), run(11));
  EXPECT_NE(run(11), run(12));
}
