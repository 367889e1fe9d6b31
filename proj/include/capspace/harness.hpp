#pragma once

// Scenario execution, run metrics, history checkers and parameter sweeps.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/history.hpp"
#include "capspace/lattice.hpp"
#include "capspace/policy.hpp"
#include "capspace/runtime.hpp"
#include "capspace/scenario.hpp"

namespace capspace {

struct Metrics {
  std::size_t ops_total = 0;
  std::size_t ops_available = 0;
  double availability = 1.0;
  double latency_mean = 0.0;
  Millis latency_max = 0;
  std::optional<Millis> convergence_ms;  // nothing if some register never converged
  std::size_t messages = 0;
  std::map<RegisterId, Millis> max_age;  // largest served age of any read
};

struct RunResult {
  History history;
  Metrics metrics;
  std::string trace;
  std::size_t non_monotone_changes = 0;
};

namespace detail {

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

inline Metrics compute_metrics(const History& h, std::size_t messages) {
  Metrics m;
  m.messages = messages;
  m.ops_total = h.ops.size();
  Millis latency_sum = 0;
  std::size_t completed = 0;
  for (const auto& op : h.ops) {
    if (is_available(op, h.horizon)) ++m.ops_available;
    if (op.outcome == OutcomeKind::Completed && op.responded) {
      Millis lat = *op.responded - op.invoked;
      latency_sum += lat;
      m.latency_max = std::max(m.latency_max, lat);
      ++completed;
    }
  }
  if (m.ops_total) m.availability = static_cast<double>(m.ops_available) / static_cast<double>(m.ops_total);
  if (completed) m.latency_mean = static_cast<double>(latency_sum) / static_cast<double>(completed);

  Millis worst = 0;
  bool all_converged = true;
  for (const auto& c : h.convergence) {
    if (!c.last_update) continue;
    if (!c.converged_at) {
      all_converged = false;
      continue;
    }
    worst = std::max(worst, *c.converged_at - *c.last_update);
  }
  if (all_converged) m.convergence_ms = worst;

  for (const auto& r : h.registers) m.max_age[r.reg.id] = 0;
  for (const auto& a : h.accesses) {
    if (a.access == Access::Read && a.served_age) m.max_age[a.reg] = std::max(m.max_age[a.reg], *a.served_age);
  }
  return m;
}

inline std::string write_metrics(const Metrics& m) {
  std::ostringstream out;
  out << "availability\t" << detail::fixed3(m.availability) << '\n';
  out << "ops_total\t" << m.ops_total << '\n';
  out << "ops_available\t" << m.ops_available << '\n';
  out << "latency_mean\t" << detail::fixed3(m.latency_mean) << '\n';
  out << "latency_max\t" << m.latency_max << '\n';
  out << "convergence_ms\t" << (m.convergence_ms ? *m.convergence_ms : -1) << '\n';
  out << "messages\t" << m.messages << '\n';
  for (const auto& [reg, age] : m.max_age) out << "max_age\t" << reg.name << '\t' << age << '\n';
  return out.str();
}

/// Executes a scenario. `seed` overrides the scenario seed; `until` stops the
/// simulation early (ops still running at that point are recorded as blocked).
inline RunResult run_scenario(const Scenario& s, std::optional<std::uint64_t> seed = std::nullopt,
                              std::optional<Millis> until = std::nullopt) {
  Runtime rt(s.nodes, s.link, seed.value_or(s.seed));
  for (const auto& l : s.link_overrides) rt.sim().set_link(l.a, l.b, l.model);
  for (const auto& r : s.registers) rt.declare(Register{r.id, r.kind, r.primary, r.replicas}, r.policy);
  for (const auto& rc : s.reconfigurations) rt.reconfigure(rc.reg, rc.policy, rc.at);
  for (const auto& f : s.faults) {
    if (const auto* p = std::get_if<PartitionFault>(&f.what)) {
      rt.sim().set_partition(p->config, f.at);
    } else if (std::holds_alternative<HealFault>(f.what)) {
      rt.sim().heal(f.at);
    } else if (const auto* c = std::get_if<CrashFault>(&f.what)) {
      rt.sim().set_node_status(c->node, false, f.at);
    } else if (const auto* r = std::get_if<RecoverFault>(&f.what)) {
      rt.sim().set_node_status(r->node, true, f.at);
    }
  }
  const Millis stop = std::min(until.value_or(s.horizon), s.horizon);
  if (s.gossip_period) rt.start_gossip(*s.gossip_period, stop);
  for (const auto& op : s.workload) rt.invoke(op.program, op.node, op.at, op.deadline);
  rt.run_until(stop);
  rt.finalize(stop);

  RunResult out;
  out.history = rt.history();
  out.metrics = compute_metrics(out.history, rt.sim().messages_sent());
  out.trace = rt.sim().render_trace();
  out.non_monotone_changes = rt.non_monotone_changes();
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path.string());
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_run(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "trace.txt", r.trace);
  write_text_file(dir / "history.tsv", write_history(r.history));
  write_text_file(dir / "metrics.tsv", write_metrics(r.metrics));
}

// ---------------------------------------------------------------------------
// Checkers

struct CheckReport {
  bool ok = true;
  std::vector<std::string> violations;
  std::string witness;  // serializable: the order that explains the history

  void violation(std::string what) {
    ok = false;
    violations.push_back(std::move(what));
  }
};

/// Every replica's final state must equal the join of every update result
/// recorded for that register.
inline CheckReport check_convergence(const History& h) {
  CheckReport report;
  std::map<RegisterId, LatticeValue> expected;
  for (const auto& r : h.registers) expected.emplace(r.reg.id, LatticeValue::bottom(r.reg.kind));
  for (const auto& u : h.updates) {
    auto it = expected.find(u.reg);
    if (it == expected.end()) {
      report.violation("update of undeclared register " + u.reg.name);
      continue;
    }
    it->second = merge(it->second, u.result);
  }
  for (const auto& r : h.registers) {
    bool seen = false;
    for (const auto& st : h.states) {
      if (st.reg != r.reg.id) continue;
      seen = true;
      if (!(st.value == expected.at(r.reg.id))) {
        report.violation("register " + r.reg.id.name + " node " + std::to_string(st.node.value) + ": has " +
                         render(st.value) + ", expected " + render(expected.at(r.reg.id)));
      }
    }
    if (!seen) report.violation("register " + r.reg.id.name + " has no final states");
  }
  return report;
}

namespace detail {

inline bool replay_order(const std::vector<const CommittedTxn*>& order, const std::map<RegisterId, Kind>& kinds,
                         std::map<RegisterId, LatticeValue>& state) {
  for (const auto& [reg, kind] : kinds) state.insert_or_assign(reg, LatticeValue::bottom(kind));
  for (const CommittedTxn* t : order) {
    std::size_t read = 0;
    for (const auto& op : t->ops) {
      if (const auto* r = std::get_if<TxnRead>(&op)) {
        if (!(query(state.at(r->reg)) == t->reads.at(read++))) return false;
      } else {
        const auto& w = std::get<TxnWrite>(op);
        state.at(w.reg) = update(state.at(w.reg), w.op);
      }
    }
  }
  return true;
}

}  // namespace detail

inline constexpr std::size_t kMaxSerializableTxns = 8;

/// Searches every serial order of the committed transactions for one that
/// reproduces each read and the final replica state of every register only
/// transactions wrote to. Histories with more than eight transactions are
/// rejected with TooLarge.
inline CheckReport check_serializable(const History& h) {
  if (h.txns.size() > kMaxSerializableTxns) {
    throw Error(ErrorCode::TooLarge,
                std::to_string(h.txns.size()) + " transactions (limit " + std::to_string(kMaxSerializableTxns) + ")");
  }
  std::map<RegisterId, Kind> kinds;
  for (const auto& r : h.registers) kinds.emplace(r.reg.id, r.reg.kind);
  std::map<RegisterId, std::size_t> txn_writes;
  for (const auto& t : h.txns) {
    for (const auto& op : t.ops) {
      if (!kinds.contains(register_of(op))) throw Error(ErrorCode::UnboundRegister, register_of(op).name);
      if (std::holds_alternative<TxnWrite>(op)) ++txn_writes[register_of(op)];
    }
  }
  // A register's final state is comparable only if transactions were its
  // sole writers.
  std::map<RegisterId, std::size_t> all_writes;
  for (const auto& u : h.updates) ++all_writes[u.reg];
  std::map<RegisterId, LatticeValue> final_state;
  for (const auto& [reg, n] : txn_writes) {
    if (all_writes[reg] != n) continue;
    std::optional<LatticeValue> joined;
    for (const auto& st : h.states) {
      if (st.reg == reg) joined = joined ? merge(*joined, st.value) : st.value;
    }
    if (joined) final_state.emplace(reg, *joined);
  }

  std::vector<std::size_t> idx(h.txns.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::map<RegisterId, LatticeValue> state;
  do {
    std::vector<const CommittedTxn*> order;
    for (auto i : idx) order.push_back(&h.txns[i]);
    if (!detail::replay_order(order, kinds, state)) continue;
    bool finals = std::all_of(final_state.begin(), final_state.end(),
                              [&](const auto& kv) { return state.at(kv.first) == kv.second; });
    if (!finals) continue;
    CheckReport ok;
    for (std::size_t i = 0; i < order.size(); ++i) ok.witness += (i ? " " : "") + std::to_string(order[i]->id);
    return ok;
  } while (std::next_permutation(idx.begin(), idx.end()));

  CheckReport bad;
  bad.violation("no serial order of " + std::to_string(h.txns.size()) + " transactions explains the history");
  return bad;
}

/// Every completed Spry read must respect the staleness bound on its served
/// age and the latency bound on its duration.
inline CheckReport check_staleness(const History& h) {
  CheckReport report;
  for (const auto& a : h.accesses) {
    if (a.access != Access::Read || a.outcome != OutcomeKind::Completed) continue;
    if (a.policy.rfind("spry", 0) != 0) continue;
    const auto spry = std::get<SpryPolicy>(parse_policy(a.policy));
    const std::string who = "op " + std::to_string(a.op) + " read of " + a.reg.name;
    if (spry.max_staleness && a.served_age && *a.served_age > *spry.max_staleness) {
      report.violation(who + ": served age " + std::to_string(*a.served_age) + " > staleness " +
                       std::to_string(*spry.max_staleness));
    }
    if (spry.latency_bound && a.end && *a.end - a.start > *spry.latency_bound) {
      report.violation(who + ": took " + std::to_string(*a.end - a.start) + " > latency " +
                       std::to_string(*spry.latency_bound));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  Millis value = 0;
  std::string policy;
  Metrics metrics;
  bool converged = false;
};

/// Sets the first partition window of `s` to last `duration` ms. A duration
/// of zero removes the partition.
inline Scenario with_partition_duration(Scenario s, Millis duration) {
  std::stable_sort(s.faults.begin(), s.faults.end(), [](const Fault& a, const Fault& b) { return a.at < b.at; });
  auto part = std::find_if(s.faults.begin(), s.faults.end(),
                           [](const Fault& f) { return std::holds_alternative<PartitionFault>(f.what); });
  if (part == s.faults.end()) throw Error(ErrorCode::ValidationError, "scenario has no partition to sweep");
  if (duration < 0) throw Error(ErrorCode::ValidationError, "partition duration must be non-negative");
  const Millis start = part->at;
  auto heal = std::find_if(part, s.faults.end(), [](const Fault& f) { return std::holds_alternative<HealFault>(f.what); });
  if (duration == 0) {
    if (heal != s.faults.end()) s.faults.erase(heal);
    s.faults.erase(std::find_if(s.faults.begin(), s.faults.end(),
                                [](const Fault& f) { return std::holds_alternative<PartitionFault>(f.what); }));
    return s;
  }
  if (heal == s.faults.end()) {
    s.faults.push_back(Fault{start + duration, HealFault{}});
  } else {
    heal->at = start + duration;
  }
  return s;
}

inline Scenario with_policy(Scenario s, const Policy& p) {
  for (auto& r : s.registers) r.policy = p;
  s.reconfigurations.clear();
  return s;
}

/// The policies a sweep compares: Lasp, pure Austere and the scenario's first
/// Spry policy (a 30 ms latency bound if there is none).
inline std::vector<Policy> sweep_policies(const Scenario& s) {
  Policy spry = SpryPolicy{std::nullopt, 30};
  auto first_spry = std::find_if(s.registers.begin(), s.registers.end(),
                                 [](const RegisterDecl& r) { return std::holds_alternative<SpryPolicy>(r.policy); });
  if (first_spry != s.registers.end()) spry = first_spry->policy;
  return {LaspPolicy{}, AusterePolicy{TxnMode::Pure, std::nullopt}, spry};
}

inline std::vector<SweepRow> sweep(const Scenario& s, const std::string& param, const std::vector<Millis>& values) {
  if (param != "partition-duration") throw Error(ErrorCode::UnknownParameter, param);
  std::vector<SweepRow> rows;
  for (Millis v : values) {
    Scenario varied = with_partition_duration(s, v);
    for (const auto& p : sweep_policies(s)) {
      RunResult r = run_scenario(with_policy(varied, p));
      rows.push_back({v, render(p), r.metrics, check_convergence(r.history).ok});
    }
  }
  return rows;
}

inline std::string write_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "value\tpolicy\tavailability\tmax_age\tconverged\tconvergence_ms\n";
  for (const auto& r : rows) {
    Millis age = 0;
    for (const auto& [reg, a] : r.metrics.max_age) age = std::max(age, a);
    out << r.value << '\t' << r.policy << '\t' << detail::fixed3(r.metrics.availability) << '\t' << age << '\t'
        << (r.converged ? "yes" : "no") << '\t' << (r.metrics.convergence_ms ? *r.metrics.convergence_ms : -1) << '\n';
  }
  return out.str();
}

}  // namespace capspace
