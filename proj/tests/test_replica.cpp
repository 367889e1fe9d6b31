#include <gtest/gtest.h>

#include "capspace/replica.hpp"

using namespace capspace;

namespace {

NodeId N(std::uint32_t n) { return NodeId{n}; }
const RegisterId R{"r"};

struct Cluster {
  Simulator sim;
  Datastore store;
  AntiEntropy ae;

  Cluster(std::size_t nodes, Millis latency, Kind kind = Kind::GSet, NodeId primary = NodeId{0})
      : sim(nodes, LinkModel{LatencyModel::fixed(latency), 0.0}, 1), store(sim), ae(sim, store) {
    std::vector<NodeId> all;
    for (std::uint32_t n = 0; n < nodes; ++n) all.push_back(N(n));
    store.declare(Register{R, kind, primary, all});
  }

  void add(NodeId node, Element e) { store.local_update(node, R, Add{e, actor_of(node)}, sim.now()); }
  Observable read(NodeId node) { return store.local_read(node, R, sim.now()).value; }
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ValidationError;
}

}  // namespace

TEST(Replica, DeclareValidation) {
  Simulator sim(3, LinkModel{}, 1);
  Datastore store(sim);
  EXPECT_EQ(code_of([&] { store.declare(Register{R, Kind::GSet, N(2), {N(0), N(1)}}); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { store.declare(Register{R, Kind::GSet, N(0), {N(0), N(5)}}); }), ErrorCode::InvalidNode);
  store.declare(Register{R, Kind::GSet, N(0), {N(1), N(0), N(1)}});
  EXPECT_EQ(store.reg(R).replicas, (std::vector<NodeId>{N(0), N(1)}));
  EXPECT_EQ(code_of([&] { store.declare(Register{R, Kind::GSet, N(0), {N(0)}}); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { store.value(N(2), R); }), ErrorCode::NotAReplica);
  EXPECT_EQ(code_of([&] { store.value(N(0), RegisterId{"x"}); }), ErrorCode::UnboundRegister);
}

TEST(Replica, UpdatesStayLocal) {
  Cluster c(2, 5);
  c.add(N(1), 4);
  EXPECT_EQ(c.read(N(1)), Observable{ElementSet{4}});
  EXPECT_EQ(c.read(N(0)), Observable{ElementSet{}});
  EXPECT_FALSE(c.store.replicas_identical(R));
}

TEST(Replica, DownNodeCannotUpdate) {
  Cluster c(2, 5);
  c.sim.set_node_status(N(1), false, 0);
  c.sim.run_until(0);
  EXPECT_EQ(code_of([&] { c.add(N(1), 1); }), ErrorCode::NodeDown);
}

TEST(Replica, AntiEntropySessionSyncsBothSides) {
  Cluster c(3, 5);
  c.add(N(1), 1);
  c.add(N(2), 2);
  Millis done_at = -1;
  c.ae.session(N(1), N(2), {R}, [&](Millis t) { done_at = t; });
  c.sim.run_until(100);
  EXPECT_EQ(done_at, 10);
  EXPECT_EQ(c.read(N(1)), (Observable{ElementSet{1, 2}}));
  EXPECT_EQ(c.read(N(2)), (Observable{ElementSet{1, 2}}));
  EXPECT_EQ(c.read(N(0)), Observable{ElementSet{}});
  EXPECT_EQ(c.store.state(N(2), R).last_sync.at(N(1)), 5);
  EXPECT_EQ(c.store.state(N(1), R).last_sync.at(N(2)), 10);
}

TEST(Replica, AgeIsTimeSinceLastSyncWithPrimary) {
  Cluster c(3, 5);
  c.sim.run_until(40);
  EXPECT_EQ(c.store.age(N(0), R, 40), 0);
  EXPECT_EQ(c.store.age(N(1), R, 40), 40);
  // A session started by the primary reaches node 1 at 45; node 1 is then
  // fresh as of 45, and the primary hears back at 50.
  c.ae.session(N(0), N(1), {R});
  c.sim.run_until(60);
  EXPECT_EQ(c.store.age(N(1), R, 60), 15);
  // Syncing with a non-primary peer does not refresh the age.
  c.ae.session(N(2), N(1), {R});
  c.sim.run_until(80);
  EXPECT_EQ(c.store.age(N(1), R, 80), 35);
  EXPECT_EQ(c.store.age(N(2), R, 80), 80);
}

TEST(Replica, RefreshPullsThePrimaryState) {
  Cluster c(3, 5);
  c.add(N(0), 7);
  Millis done_at = -1;
  c.ae.refresh_from_primary(N(2), R, [&](Millis t) { done_at = t; }, false);
  c.sim.run_until(100);
  EXPECT_EQ(done_at, 10);
  EXPECT_EQ(c.read(N(2)), Observable{ElementSet{7}});
  EXPECT_EQ(c.store.age(N(2), R, 10), 0);
}

TEST(Replica, RefreshWithRetryWaitsOutAPartition) {
  Cluster c(3, 5);
  c.sim.set_partition(PartitionConfig{{{N(0), N(1)}, {N(2)}}}, 0);
  c.sim.heal(100);
  c.sim.run_until(0);
  Millis once = -1, retried = -1;
  c.ae.refresh_from_primary(N(2), R, [&](Millis t) { once = t; }, false);
  c.ae.refresh_from_primary(N(2), R, [&](Millis t) { retried = t; }, true);
  c.sim.run_until(300);
  EXPECT_EQ(once, -1);
  // Retries fire every 2*5+1 = 11 ms: the first after heal is sent at 110.
  EXPECT_EQ(retried, 120);
}

TEST(Replica, GossipConvergesAndTracksConvergenceTime) {
  Cluster c(4, 3);
  for (std::uint32_t n = 0; n < 4; ++n) c.add(N(n), n);
  c.ae.start_gossip(20, 400);
  c.sim.run_until(400);
  EXPECT_TRUE(c.store.replicas_identical(R));
  EXPECT_EQ(c.read(N(3)), (Observable{ElementSet{0, 1, 2, 3}}));
  const auto& cs = c.store.convergence().at(R);
  ASSERT_TRUE(cs.converged_since);
  EXPECT_GE(*cs.converged_since, 20);
  EXPECT_EQ(*cs.last_update, 0);
}

TEST(Replica, ConvergenceClockRestartsOnUpdate) {
  Cluster c(2, 5);
  c.add(N(0), 1);
  c.ae.session(N(0), N(1), {R});
  c.sim.run_until(50);
  EXPECT_EQ(c.store.convergence().at(R).converged_since, std::optional<Millis>{5});
  // Re-adding an element changes no state but is still a new update.
  c.add(N(0), 1);
  EXPECT_EQ(c.store.convergence().at(R).converged_since, std::optional<Millis>{50});
  c.add(N(0), 2);
  EXPECT_FALSE(c.store.convergence().at(R).converged_since);
}

TEST(Replica, ChangesAreMonotone) {
  Cluster c(3, 2, Kind::ORSet);
  int changes = 0;
  c.store.on_change = [&](NodeId, const RegisterId&, const LatticeValue& before, const LatticeValue& after) {
    ++changes;
    EXPECT_TRUE(leq(before, after));
  };
  c.add(N(0), 1);
  c.store.local_update(N(1), R, Remove{1}, 0);
  c.ae.start_gossip(10, 100);
  c.sim.run_until(100);
  EXPECT_GT(changes, 2);
}
