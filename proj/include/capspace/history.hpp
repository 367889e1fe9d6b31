#pragma once

// The recorded history of a run and its tab-separated file form.
//
// Every line is one record; the first field names the record type and the
// remaining fields follow a fixed order. Optional fields are written as '-'.
//
//   register  <id> <kind> <primary> <replicas,comma-separated> <policy>
//   op        <id> <node> <invoked> <deadline> <outcome> <responded> <value> <served_age> <policy> <program>
//   access    <op> <register> <read|write> <start> <end> <served_age> <outcome> <policy>
//   txn       <id> <coordinator> <decided_at> <ops: read(r)=v;write(r,op)...>
//   update    <time> <node> <register> <op> <resulting state>
//   state     <node> <register> <state>
//   converged <register> <last_update> <converged_at>
//   horizon   <ms>

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/lattice.hpp"
#include "capspace/policy.hpp"
#include "capspace/replica.hpp"
#include "capspace/txn.hpp"

namespace capspace {

enum class OutcomeKind { Completed, Blocked, Failed };

inline std::string_view outcome_name(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Completed: return "completed";
    case OutcomeKind::Blocked: return "blocked";
    case OutcomeKind::Failed: return "failed";
  }
  return "?";
}

struct OpRecord {
  std::size_t id = 0;
  NodeId node;
  Millis invoked = 0;
  std::optional<Millis> deadline;
  OutcomeKind outcome = OutcomeKind::Blocked;
  std::optional<Millis> responded;
  std::string value;  // rendered value, error, or blocking reason
  std::optional<Millis> served_age;
  std::string policy;  // policy of the first register accessed, "-" if none
  std::string program;
};

struct AccessRecord {
  std::size_t op = 0;
  RegisterId reg;
  Access access = Access::Read;
  Millis start = 0;
  std::optional<Millis> end;
  std::optional<Millis> served_age;
  OutcomeKind outcome = OutcomeKind::Blocked;
  std::string policy;
};

struct RegisterRecord {
  Register reg;
  std::string policy;
};

struct StateRecord {
  NodeId node;
  RegisterId reg;
  LatticeValue value;
};

struct ConvergenceRecord {
  RegisterId reg;
  std::optional<Millis> last_update;
  std::optional<Millis> converged_at;
};

struct History {
  std::vector<RegisterRecord> registers;
  std::vector<OpRecord> ops;
  std::vector<AccessRecord> accesses;
  std::vector<CommittedTxn> txns;
  std::vector<UpdateRecord> updates;
  std::vector<StateRecord> states;
  std::vector<ConvergenceRecord> convergence;
  Millis horizon = 0;
};

/// An op counts as available iff it completed within its deadline, or by the
/// horizon when it has none.
inline bool is_available(const OpRecord& op, Millis horizon) {
  if (op.outcome != OutcomeKind::Completed || !op.responded) return false;
  if (op.deadline) return *op.responded - op.invoked <= *op.deadline;
  return *op.responded <= horizon;
}

namespace detail {

inline std::string opt(const std::optional<Millis>& v) { return v ? std::to_string(*v) : "-"; }

inline std::string join_nodes(const std::vector<NodeId>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(nodes[i].value);
  }
  return out;
}

inline std::string render_txn_ops(const CommittedTxn& t) {
  std::string out;
  std::size_t read = 0;
  for (std::size_t i = 0; i < t.ops.size(); ++i) {
    if (i) out += ';';
    out += render(t.ops[i]);
    if (std::holds_alternative<TxnRead>(t.ops[i])) out += "=" + render(t.reads.at(read++));
  }
  return out;
}

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void history_error(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::ParseError, "history line " + std::to_string(line) + ": " + why);
}

inline Millis to_ms(std::size_t line, const std::string& s) {
  try {
    std::size_t used = 0;
    Millis v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  history_error(line, "expected integer, got '" + s + "'");
}

inline std::optional<Millis> to_opt_ms(std::size_t line, const std::string& s) {
  if (s == "-") return std::nullopt;
  return to_ms(line, s);
}

inline std::vector<NodeId> to_nodes(std::size_t line, const std::string& s) {
  std::vector<NodeId> out;
  for (const auto& part : split(s, ',')) out.push_back(NodeId{static_cast<std::uint32_t>(to_ms(line, part))});
  return out;
}

inline OutcomeKind to_outcome(std::size_t line, const std::string& s) {
  for (auto k : {OutcomeKind::Completed, OutcomeKind::Blocked, OutcomeKind::Failed}) {
    if (outcome_name(k) == s) return k;
  }
  history_error(line, "unknown outcome '" + s + "'");
}

inline CommittedTxn parse_txn_ops(std::size_t line, CommittedTxn t, const std::string& text) {
  for (const auto& part : split(text, ';')) {
    auto open = part.find('(');
    if (open == std::string::npos) history_error(line, "bad txn op '" + part + "'");
    std::string verb = part.substr(0, open);
    if (verb == "read") {
      auto close = part.find(")=");
      if (close == std::string::npos) history_error(line, "bad read '" + part + "'");
      t.ops.emplace_back(TxnRead{RegisterId{part.substr(open + 1, close - open - 1)}});
      t.reads.push_back(parse_observable(part.substr(close + 2)));
    } else if (verb == "write") {
      auto comma = part.find(',', open);
      if (comma == std::string::npos || part.back() != ')') history_error(line, "bad write '" + part + "'");
      RegisterId reg{part.substr(open + 1, comma - open - 1)};
      t.ops.emplace_back(TxnWrite{reg, parse_update_op(part.substr(comma + 1, part.size() - comma - 2))});
    } else {
      history_error(line, "bad txn op '" + part + "'");
    }
  }
  return t;
}

}  // namespace detail

inline std::string write_history(const History& h) {
  using detail::opt;
  std::ostringstream out;
  out << "# capspace history v1\n";
  out << "horizon\t" << h.horizon << '\n';
  for (const auto& r : h.registers) {
    out << "register\t" << r.reg.id.name << '\t' << kind_name(r.reg.kind) << '\t' << r.reg.primary.value << '\t'
        << detail::join_nodes(r.reg.replicas) << '\t' << r.policy << '\n';
  }
  for (const auto& o : h.ops) {
    out << "op\t" << o.id << '\t' << o.node.value << '\t' << o.invoked << '\t' << opt(o.deadline) << '\t'
        << outcome_name(o.outcome) << '\t' << opt(o.responded) << '\t' << o.value << '\t' << opt(o.served_age)
        << '\t' << o.policy << '\t' << o.program << '\n';
  }
  for (const auto& a : h.accesses) {
    out << "access\t" << a.op << '\t' << a.reg.name << '\t' << (a.access == Access::Read ? "read" : "write") << '\t'
        << a.start << '\t' << opt(a.end) << '\t' << opt(a.served_age) << '\t' << outcome_name(a.outcome) << '\t'
        << a.policy << '\n';
  }
  for (const auto& t : h.txns) {
    out << "txn\t" << t.id << '\t' << t.coordinator.value << '\t' << t.decided_at << '\t' << detail::render_txn_ops(t)
        << '\n';
  }
  for (const auto& u : h.updates) {
    out << "update\t" << u.time << '\t' << u.node.value << '\t' << u.reg.name << '\t' << render(u.op) << '\t'
        << render(u.result) << '\n';
  }
  for (const auto& s : h.states) {
    out << "state\t" << s.node.value << '\t' << s.reg.name << '\t' << render(s.value) << '\n';
  }
  for (const auto& c : h.convergence) {
    out << "converged\t" << c.reg.name << '\t' << opt(c.last_update) << '\t' << opt(c.converged_at) << '\n';
  }
  return out.str();
}

inline History parse_history(std::string_view text) {
  using namespace detail;
  History h;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    auto need = [&](std::size_t n) {
      if (f.size() != n) {
        history_error(line_no, f[0] + " record needs " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
      }
    };
    const std::string& type = f[0];
    if (type == "horizon") {
      need(2);
      h.horizon = to_ms(line_no, f[1]);
    } else if (type == "register") {
      need(6);
      auto kind = kind_from_name(f[2]);
      if (!kind) history_error(line_no, "unknown kind '" + f[2] + "'");
      Register r{RegisterId{f[1]}, *kind, NodeId{static_cast<std::uint32_t>(to_ms(line_no, f[3]))},
                 to_nodes(line_no, f[4])};
      h.registers.push_back({std::move(r), f[5]});
    } else if (type == "op") {
      need(11);
      OpRecord o;
      o.id = static_cast<std::size_t>(to_ms(line_no, f[1]));
      o.node = NodeId{static_cast<std::uint32_t>(to_ms(line_no, f[2]))};
      o.invoked = to_ms(line_no, f[3]);
      o.deadline = to_opt_ms(line_no, f[4]);
      o.outcome = to_outcome(line_no, f[5]);
      o.responded = to_opt_ms(line_no, f[6]);
      o.value = f[7];
      o.served_age = to_opt_ms(line_no, f[8]);
      o.policy = f[9];
      o.program = f[10];
      h.ops.push_back(std::move(o));
    } else if (type == "access") {
      need(9);
      AccessRecord a;
      a.op = static_cast<std::size_t>(to_ms(line_no, f[1]));
      a.reg = RegisterId{f[2]};
      if (f[3] != "read" && f[3] != "write") history_error(line_no, "access must be read or write");
      a.access = f[3] == "read" ? Access::Read : Access::Write;
      a.start = to_ms(line_no, f[4]);
      a.end = to_opt_ms(line_no, f[5]);
      a.served_age = to_opt_ms(line_no, f[6]);
      a.outcome = to_outcome(line_no, f[7]);
      a.policy = f[8];
      h.accesses.push_back(std::move(a));
    } else if (type == "txn") {
      need(5);
      CommittedTxn t;
      t.id = static_cast<TxnId>(to_ms(line_no, f[1]));
      t.coordinator = NodeId{static_cast<std::uint32_t>(to_ms(line_no, f[2]))};
      t.decided_at = to_ms(line_no, f[3]);
      h.txns.push_back(parse_txn_ops(line_no, std::move(t), f[4]));
    } else if (type == "update") {
      need(6);
      h.updates.push_back(UpdateRecord{to_ms(line_no, f[1]), NodeId{static_cast<std::uint32_t>(to_ms(line_no, f[2]))},
                                       RegisterId{f[3]}, parse_update_op(f[4]), parse_lattice(f[5])});
    } else if (type == "state") {
      need(4);
      h.states.push_back(
          StateRecord{NodeId{static_cast<std::uint32_t>(to_ms(line_no, f[1]))}, RegisterId{f[2]}, parse_lattice(f[3])});
    } else if (type == "converged") {
      need(4);
      h.convergence.push_back(ConvergenceRecord{RegisterId{f[1]}, to_opt_ms(line_no, f[2]), to_opt_ms(line_no, f[3])});
    } else {
      history_error(line_no, "unknown record type '" + type + "'");
    }
  }
  return h;
}

}  // namespace capspace
