// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Fixture paths are resolved relative to CAPSPACE_SCENARIOS.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "capspace/harness.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace capspace;
using capspace::gen::Rng;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

fs::path fixture(const std::string& name) { return fs::path(CAPSPACE_SCENARIOS) / name; }

Verdict lattice_laws() {
  Rng rng(1);
  std::size_t triples = 0;
  for (Kind kind : kAllKinds) {
    for (int i = 0; i < 1000; ++i, ++triples) {
      auto [a, b, c] = gen::random_triple(rng, kind);
      auto fail = [&](const std::string& law) {
        return Verdict{false, std::string(kind_name(kind)) + " " + law + " on " + render(a) + ", " + render(b) + ", " +
                                  render(c)};
      };
      if (!(merge(a, b) == merge(b, a))) return fail("commutativity");
      if (!(merge(merge(a, b), c) == merge(a, merge(b, c)))) return fail("associativity");
      if (!(merge(a, a) == a)) return fail("idempotence");
      if (!leq(a, merge(a, b)) || !leq(b, merge(a, b))) return fail("upper bound");
      if (leq(a, b) != (merge(a, b) == b)) return fail("order consistency");
      auto op = gen::random_update(rng, kind, ActorId{0});
      if (!leq(a, update(a, op))) return fail("inflation");
    }
  }
  return {true, std::to_string(triples) + " triples"};
}

Verdict convergence() {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto s = gen::random_convergence_scenario(seed);
    auto r = run_scenario(s);
    auto report = check_convergence(r.history);
    if (!report.ok) return {false, "seed " + std::to_string(seed) + ": " + report.violations.front()};
    if (r.non_monotone_changes) return {false, "seed " + std::to_string(seed) + ": replica state went down"};
  }
  return {true, "100 runs"};
}

Verdict cap_demo() {
  auto lasp = run_scenario(load_scenario(fixture("cap_demo_lasp.scn")));
  auto austere_s = load_scenario(fixture("cap_demo_austere.scn"));
  auto austere = run_scenario(austere_s);
  auto spry = run_scenario(load_scenario(fixture("cap_demo_spry.scn")));

  // Hand count: ops invoked outside the partition window [100, 300].
  std::size_t outside = 0;
  for (const auto& op : austere_s.workload) outside += (op.at < 100 || op.at > 300) ? 1 : 0;
  const double expected = static_cast<double>(outside) / static_cast<double>(austere_s.workload.size());

  std::ostringstream detail;
  detail << "lasp=" << detail::fixed3(lasp.metrics.availability)
         << " austere=" << detail::fixed3(austere.metrics.availability) << " (expected " << detail::fixed3(expected)
         << ") spry=" << detail::fixed3(spry.metrics.availability) << " spry_max_latency=" << spry.metrics.latency_max;
  bool ok = lasp.metrics.availability == 1.0 && austere.metrics.ops_available == outside &&
            spry.metrics.availability == 1.0 && spry.metrics.latency_max <= 30;
  return {ok, detail.str()};
}

Verdict serializability() {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto r = run_scenario(gen::random_austere_scenario(seed));
    auto report = check_serializable(r.history);
    if (!report.ok) return {false, "seed " + std::to_string(seed) + ": " + report.violations.front()};
  }
  // N concurrent increments from three nodes, several from the same node.
  const int n = 7;
  Scenario s;
  s.nodes = 3;
  s.link = LinkModel{LatencyModel::uniform(1, 5), 0.0};
  s.horizon = 2000;
  s.registers.push_back({RegisterId{"c"}, Kind::GCounter, NodeId{0}, {NodeId{0}, NodeId{1}, NodeId{2}},
                         AusterePolicy{TxnMode::Pure, std::nullopt}});
  for (int i = 0; i < n; ++i) {
    s.workload.push_back({10, NodeId{static_cast<std::uint32_t>(i % 3)}, std::nullopt, parse_expr("(store c (inc))")});
  }
  s.workload.push_back({1500, NodeId{1}, std::nullopt, parse_expr("(deref c)")});
  auto r = run_scenario(s);
  const auto& last = r.history.ops.back();
  if (last.value != std::to_string(n)) return {false, "concurrent increments read " + last.value};
  if (!check_serializable(r.history).ok) return {false, "concurrent increments not serializable"};
  return {true, "50 runs, " + std::to_string(n) + " increments -> " + last.value};
}

Verdict staleness_audit() {
  std::size_t runs = 0;
  for (const auto& entry : fs::directory_iterator(CAPSPACE_SCENARIOS)) {
    if (entry.path().extension() != ".scn") continue;
    auto s = load_scenario(entry.path().string());
    bool has_spry = false;
    for (const auto& r : s.registers) has_spry |= std::holds_alternative<SpryPolicy>(r.policy);
    if (!has_spry) continue;
    ++runs;
    auto report = check_staleness(run_scenario(s).history);
    if (!report.ok) return {false, entry.path().filename().string() + ": " + report.violations.front()};
  }
  auto forged = check_staleness(parse_history(read_text_file(fixture("forged_staleness.tsv"))));
  std::set<std::string> seen;
  for (const auto& v : forged.violations) seen.insert(v.substr(0, v.find(':')));
  const std::set<std::string> seeded = {"op 2 read of r1", "op 4 read of r1", "op 5 read of r1"};
  if (seen != seeded || forged.violations.size() != seeded.size()) {
    return {false, "forged history flagged " + std::to_string(forged.violations.size()) + " violations"};
  }
  return {true, std::to_string(runs) + " spry fixtures clean, forged history flags exactly 3"};
}

Verdict determinism() {
  std::size_t runs = 0;
  for (const auto& entry : fs::directory_iterator(CAPSPACE_SCENARIOS)) {
    if (entry.path().extension() != ".scn") continue;
    auto s = load_scenario(entry.path().string());
    auto a = run_scenario(s);
    auto b = run_scenario(s);
    ++runs;
    if (a.trace != b.trace || write_history(a.history) != write_history(b.history) ||
        write_metrics(a.metrics) != write_metrics(b.metrics)) {
      return {false, entry.path().filename().string() + " differs between runs"};
    }
  }
  return {runs > 0, std::to_string(runs) + " fixtures"};
}

Verdict confluence() {
  Rng rng(99);
  std::vector<std::string> programs = {
      "(app (app (lam f (lam x (app f (app f x)))) (lam y (* y 2))) 5)",
      "(let s (set 1 2 3) (size (diff s (set 2))))",
      "(if (member 3 (set 1 3)) (+ 1 1) 0)",
      "(app (lam b (not b)) (and true (or false true)))",
  };
  while (programs.size() < 24) programs.push_back(gen::random_pure_program(rng));
  const std::vector<std::string> policies = {"lasp", "austere mode=pure", "austere mode=measured deadline=40",
                                             "spry staleness=50", "spry latency=20"};
  for (const auto& text : programs) {
    const std::string expected = render(evaluate_pure(parse_expr(text)));
    for (const auto& policy : policies) {
      for (bool partitioned : {false, true}) {
        Scenario s;
        s.nodes = 3;
        s.link = LinkModel{LatencyModel::fixed(5), 0.0};
        s.horizon = 200;
        std::vector<NodeId> all = {NodeId{0}, NodeId{1}, NodeId{2}};
        s.registers.push_back({RegisterId{"r"}, Kind::GCounter, NodeId{0}, all, parse_policy(policy)});
        if (partitioned) s.faults.push_back({0, PartitionFault{PartitionConfig{{{NodeId{0}}, {NodeId{1}, NodeId{2}}}}}});
        s.workload.push_back({10, NodeId{2}, std::nullopt, parse_expr(text)});
        auto r = run_scenario(s);
        const auto& op = r.history.ops.front();
        if (op.outcome != OutcomeKind::Completed || op.value != expected) {
          return {false, text + " under " + policy + ": " + op.value + " != " + expected};
        }
      }
    }
  }
  return {true, std::to_string(programs.size()) + " programs"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
    double budget_s;
  };
  const std::vector<Criterion> criteria = {
      {"lattice-laws", lattice_laws, 5.0},      {"convergence", convergence, 30.0},
      {"cap-demo", cap_demo, 1.0},              {"serializability", serializability, 10.0},
      {"staleness-audit", staleness_audit, 0.0}, {"determinism", determinism, 0.0},
      {"pure-confluence", confluence, 0.0},
  };
  bool all = true;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      v.pass = false;
      v.detail += " (over time budget)";
    }
    all &= v.pass;
    std::printf("%s %d %s: %s [%.2fs]\n", v.pass ? "PASS" : "FAIL", index, c.name, v.detail.c_str(), secs);
  }
  return all ? 0 : 1;
}
