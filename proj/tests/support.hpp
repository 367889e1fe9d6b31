#pragma once

// Generators shared by the unit suites and the acceptance binary.

#include <array>
#include <random>
#include <string>
#include <vector>

#include "capspace/harness.hpp"
#include "capspace/lattice.hpp"

namespace capspace::gen {

using Rng = std::mt19937_64;

inline std::int64_t pick(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

/// A random update valid for `kind`, issued by `actor`.
inline UpdateOp random_update(Rng& rng, Kind kind, ActorId actor, Element max_element = 4) {
  Element e = pick(rng, 0, max_element);
  switch (kind) {
    case Kind::GCounter: return Increment{actor};
    case Kind::PNCounter: return pick(rng, 0, 1) ? UpdateOp{Increment{actor}} : UpdateOp{Decrement{actor}};
    case Kind::GSet: return Add{e, actor};
    case Kind::TwoPSet:
    case Kind::ORSet: return pick(rng, 0, 2) ? UpdateOp{Add{e, actor}} : UpdateOp{Remove{e}};
    case Kind::LWWRegister: return Assign{e, pick(rng, 0, 20), actor};
  }
  return Increment{actor};
}

/// Three reachable states of one kind: replica i only issues updates as actor
/// i, and replicas occasionally merge each other's state.
inline std::array<LatticeValue, 3> random_triple(Rng& rng, Kind kind, int steps = 12) {
  std::array<LatticeValue, 3> r{LatticeValue::bottom(kind), LatticeValue::bottom(kind), LatticeValue::bottom(kind)};
  for (int i = 0; i < steps; ++i) {
    auto at = static_cast<std::size_t>(pick(rng, 0, 2));
    if (pick(rng, 0, 3) == 0) {
      auto from = static_cast<std::size_t>(pick(rng, 0, 2));
      r[at] = merge(r[at], r[from]);
    } else {
      r[at] = update(r[at], random_update(rng, kind, ActorId{static_cast<std::uint32_t>(at)}));
    }
  }
  return r;
}

/// A random register-free program over integers, booleans and sets.
inline std::string random_pure_program(Rng& rng, int depth = 3) {
  if (depth == 0 || pick(rng, 0, 3) == 0) return std::to_string(pick(rng, -5, 9));
  auto sub = [&] { return random_pure_program(rng, depth - 1); };
  switch (pick(rng, 0, 7)) {
    case 0: return "(+ " + sub() + " " + sub() + ")";
    case 1: return "(* " + sub() + " " + sub() + ")";
    case 2: return "(- " + sub() + " " + sub() + ")";
    case 3: return "(if (< " + sub() + " " + sub() + ") " + sub() + " " + sub() + ")";
    case 4: return "(let x " + sub() + " (+ x x))";
    case 5: return "(app (lam y (* y 3)) " + sub() + ")";
    case 6: return "(size (union (set " + sub() + " " + sub() + ") (set " + sub() + ")))";
    default: return "(sum (set " + sub() + " " + sub() + " " + sub() + "))";
  }
}

/// A randomized Lasp scenario: 3-5 nodes, up to 100 updates and reads on two
/// registers, random partitions during the active phase, then a healed tail.
inline Scenario random_convergence_scenario(std::uint64_t seed) {
  Rng rng(seed);
  Scenario s;
  s.seed = seed;
  s.nodes = static_cast<std::size_t>(pick(rng, 3, 5));
  s.link = LinkModel{LatencyModel::uniform(1, 10), 0.05};
  s.gossip_period = 50;
  const Millis active = 1000;
  s.horizon = active + 1500;
  std::vector<NodeId> all;
  for (std::size_t n = 0; n < s.nodes; ++n) all.push_back(NodeId{static_cast<std::uint32_t>(n)});
  const Kind kinds[] = {Kind::GCounter, Kind::PNCounter, Kind::GSet, Kind::TwoPSet, Kind::ORSet, Kind::LWWRegister};
  for (int i = 0; i < 2; ++i) {
    Kind k = kinds[pick(rng, 0, 5)];
    s.registers.push_back(
        {RegisterId{"r" + std::to_string(i)}, k, all[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(s.nodes) - 1))], all,
         LaspPolicy{}});
  }
  const auto ops = pick(rng, 1, 100);
  for (std::int64_t i = 0; i < ops; ++i) {
    const auto& reg = s.registers[static_cast<std::size_t>(pick(rng, 0, 1))];
    std::string program;
    Element e = pick(rng, 0, 5);
    switch (reg.kind) {
      case Kind::GCounter: program = "(store " + reg.id.name + " (inc))"; break;
      case Kind::PNCounter: program = "(store " + reg.id.name + (pick(rng, 0, 1) ? " (inc))" : " (dec))"); break;
      case Kind::GSet: program = "(store " + reg.id.name + " (add " + std::to_string(e) + "))"; break;
      case Kind::TwoPSet:
      case Kind::ORSet:
        program = "(store " + reg.id.name + (pick(rng, 0, 2) ? " (add " : " (remove ") + std::to_string(e) + "))";
        break;
      case Kind::LWWRegister: program = "(store " + reg.id.name + " (assign " + std::to_string(e) + "))"; break;
    }
    if (pick(rng, 0, 3) == 0) program = "(deref " + reg.id.name + ")";
    WorkloadOp op;
    op.at = pick(rng, 0, active);
    op.node = all[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(s.nodes) - 1))];
    op.program = parse_expr(program);
    s.workload.push_back(std::move(op));
  }
  Millis t = pick(rng, 0, 200);
  while (t < active) {
    PartitionConfig cfg;
    cfg.groups.assign(2, {});
    for (NodeId n : all) cfg.groups[static_cast<std::size_t>(pick(rng, 0, 1))].push_back(n);
    std::erase_if(cfg.groups, [](const auto& g) { return g.empty(); });
    Millis heal = std::min<Millis>(active, t + pick(rng, 50, 300));
    s.faults.push_back({t, PartitionFault{cfg}});
    s.faults.push_back({heal, HealFault{}});
    t = heal + pick(rng, 20, 300);
  }
  return s;
}

/// A randomized pure-Austere scenario with at most `max_txns` single-access
/// operations over two registers.
inline Scenario random_austere_scenario(std::uint64_t seed, int max_txns = 8) {
  Rng rng(seed);
  Scenario s;
  s.seed = seed;
  s.nodes = static_cast<std::size_t>(pick(rng, 3, 4));
  s.link = LinkModel{LatencyModel::uniform(1, 6), 0.0};
  s.horizon = 3000;
  std::vector<NodeId> all;
  for (std::size_t n = 0; n < s.nodes; ++n) all.push_back(NodeId{static_cast<std::uint32_t>(n)});
  const Kind kinds[] = {Kind::GCounter, Kind::PNCounter, Kind::GSet, Kind::ORSet, Kind::LWWRegister};
  for (int i = 0; i < 2; ++i) {
    s.registers.push_back({RegisterId{"r" + std::to_string(i)}, kinds[pick(rng, 0, 4)],
                           all[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(s.nodes) - 1))], all,
                           AusterePolicy{TxnMode::Pure, std::nullopt}});
  }
  const auto ops = pick(rng, 1, max_txns);
  for (std::int64_t i = 0; i < ops; ++i) {
    const auto& reg = s.registers[static_cast<std::size_t>(pick(rng, 0, 1))];
    std::string program = "(deref " + reg.id.name + ")";
    if (pick(rng, 0, 2)) {
      std::string e = std::to_string(pick(rng, 0, 3));
      switch (reg.kind) {
        case Kind::GCounter:
        case Kind::PNCounter: program = "(store " + reg.id.name + " (inc))"; break;
        case Kind::GSet: program = "(store " + reg.id.name + " (add " + e + "))"; break;
        case Kind::ORSet:
          program = "(store " + reg.id.name + (pick(rng, 0, 1) ? " (add " : " (remove ") + e + "))";
          break;
        default: program = "(store " + reg.id.name + " (assign " + e + "))"; break;
      }
    }
    WorkloadOp op;
    op.at = pick(rng, 0, 100);
    op.node = all[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(s.nodes) - 1))];
    op.program = parse_expr(program);
    s.workload.push_back(std::move(op));
  }
  if (pick(rng, 0, 1)) {
    PartitionConfig cfg;
    NodeId lone = all[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(s.nodes) - 1))];
    cfg.groups = {{lone}, {}};
    for (NodeId n : all) {
      if (n != lone) cfg.groups[1].push_back(n);
    }
    Millis start = pick(rng, 0, 80);
    s.faults.push_back({start, PartitionFault{cfg}});
    s.faults.push_back({start + pick(rng, 20, 200), HealFault{}});
  }
  return s;
}

}  // namespace capspace::gen
