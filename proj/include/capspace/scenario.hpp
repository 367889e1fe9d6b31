#pragma once

// Scenario files: a line-oriented, sectioned text format.
//
//   # comment
//   [nodes]
//   count 3
//   [links]
//   default latency=fixed:5 drop=0
//   link 0 2 latency=uniform:5:15 drop=0.05
//   [registers]
//   register r1 kind=gcounter primary=0 replicas=0,1,2 policy=spry latency=30
//   [workload]
//   at 10 node 1 deadline=50 (store r1 (inc))
//   at 200 reconfigure r1 austere mode=pure
//   [faults]
//   at 100 partition 0|1,2
//   at 300 heal
//   at 120 crash 2
//   at 180 recover 2
//   [run]
//   horizon 1000
//   seed 42
//   gossip 50

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/kernel.hpp"
#include "capspace/lattice.hpp"
#include "capspace/policy.hpp"
#include "capspace/simnet.hpp"

namespace capspace {

struct RegisterDecl {
  RegisterId id;
  Kind kind = Kind::GCounter;
  NodeId primary;
  std::vector<NodeId> replicas;
  Policy policy;
};

struct WorkloadOp {
  Millis at = 0;
  NodeId node;
  std::optional<Millis> deadline;
  ExprPtr program;
};

struct Reconfiguration {
  Millis at = 0;
  RegisterId reg;
  Policy policy;
};

struct PartitionFault {
  PartitionConfig config;
};
struct HealFault {};
struct CrashFault {
  NodeId node;
};
struct RecoverFault {
  NodeId node;
};

struct Fault {
  Millis at = 0;
  std::variant<PartitionFault, HealFault, CrashFault, RecoverFault> what;
};

struct LinkOverride {
  NodeId a;
  NodeId b;
  LinkModel model;
};

struct Scenario {
  std::size_t nodes = 0;
  LinkModel link;
  std::vector<LinkOverride> link_overrides;
  std::vector<RegisterDecl> registers;
  std::vector<WorkloadOp> workload;
  std::vector<Reconfiguration> reconfigurations;
  std::vector<Fault> faults;
  std::optional<Millis> gossip_period;
  Millis horizon = 1000;
  std::uint64_t seed = 1;

  const RegisterDecl* find_register(const RegisterId& id) const {
    auto it = std::find_if(registers.begin(), registers.end(), [&](const RegisterDecl& r) { return r.id == id; });
    return it == registers.end() ? nullptr : &*it;
  }
};

namespace detail {

class ScenarioParser {
 public:
  Scenario parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      std::string line = strip(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail("malformed section header");
        section_ = line.substr(1, line.size() - 2);
        static const std::vector<std::string> known = {"nodes", "links", "registers", "workload", "faults", "run"};
        if (std::find(known.begin(), known.end(), section_) == known.end()) fail("unknown section [" + section_ + "]");
        continue;
      }
      if (section_.empty()) fail("declaration outside of any section");
      try {
        dispatch(line);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError && std::string_view(e.what()).find("line ") != std::string_view::npos) throw;
        fail(e.what(), e.code() == ErrorCode::ParseError ? ErrorCode::ParseError : ErrorCode::ValidationError);
      }
    }
    line_ = 0;
    validate();
    return std::move(s_);
  }

 private:
  static std::string strip(const std::string& raw) {
    std::string line = raw.substr(0, raw.find('#'));
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    auto last = line.find_last_not_of(" \t\r");
    return line.substr(first, last - first + 1);
  }

  [[noreturn]] void fail(const std::string& why, ErrorCode code = ErrorCode::ParseError) const {
    if (line_ == 0) throw Error(code, why);
    throw Error(code, "line " + std::to_string(line_) + ": " + why);
  }

  static std::vector<std::string> words(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  }

  std::int64_t integer(const std::string& s) const {
    try {
      std::size_t used = 0;
      auto v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail("expected integer, got '" + s + "'");
  }

  NodeId node(const std::string& s) const {
    auto v = integer(s);
    if (v < 0) fail("negative node id");
    return NodeId{static_cast<std::uint32_t>(v)};
  }

  std::vector<NodeId> node_list(const std::string& s) const {
    std::vector<NodeId> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');) out.push_back(node(part));
    if (out.empty()) fail("empty node list");
    return out;
  }

  std::map<std::string, std::string> fields(const std::vector<std::string>& ws, std::size_t from) const {
    std::map<std::string, std::string> out;
    for (std::size_t i = from; i < ws.size(); ++i) {
      auto eq = ws[i].find('=');
      if (eq == std::string::npos) fail("expected key=value, got '" + ws[i] + "'");
      out[ws[i].substr(0, eq)] = ws[i].substr(eq + 1);
    }
    return out;
  }

  LinkModel link_model(const std::map<std::string, std::string>& f) const {
    LinkModel m;
    for (const auto& [key, value] : f) {
      if (key == "latency") {
        std::vector<std::string> parts;
        std::stringstream in(value);
        for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
        if (parts.size() == 2 && parts[0] == "fixed") {
          m.latency = LatencyModel::fixed(integer(parts[1]));
        } else if (parts.size() == 3 && parts[0] == "uniform") {
          m.latency = LatencyModel::uniform(integer(parts[1]), integer(parts[2]));
        } else {
          fail("latency must be fixed:<ms> or uniform:<min>:<max>");
        }
      } else if (key == "drop") {
        try {
          std::size_t used = 0;
          m.drop_prob = std::stod(value, &used);
          if (used != value.size()) fail("bad drop probability");
        } catch (const std::invalid_argument&) {
          fail("bad drop probability");
        }
      } else {
        fail("unknown link field '" + key + "'");
      }
    }
    try {
      m.validate();
    } catch (const Error& e) {
      fail(e.what(), ErrorCode::ValidationError);
    }
    return m;
  }

  void dispatch(const std::string& line) {
    auto ws = words(line);
    if (section_ == "nodes") {
      if (ws.size() != 2 || ws[0] != "count") fail("expected 'count <n>'");
      auto n = integer(ws[1]);
      if (n <= 0) fail("node count must be positive", ErrorCode::ValidationError);
      s_.nodes = static_cast<std::size_t>(n);
    } else if (section_ == "links") {
      if (ws[0] == "default") {
        s_.link = link_model(fields(ws, 1));
      } else if (ws[0] == "link" && ws.size() >= 3) {
        s_.link_overrides.push_back({node(ws[1]), node(ws[2]), link_model(fields(ws, 3))});
      } else {
        fail("expected 'default ...' or 'link <a> <b> ...'");
      }
    } else if (section_ == "registers") {
      register_line(line, ws);
    } else if (section_ == "workload") {
      workload_line(line, ws);
    } else if (section_ == "faults") {
      fault_line(ws);
    } else if (section_ == "run") {
      if (ws.size() != 2) fail("expected '<key> <value>'");
      if (ws[0] == "horizon") {
        s_.horizon = integer(ws[1]);
      } else if (ws[0] == "seed") {
        s_.seed = static_cast<std::uint64_t>(integer(ws[1]));
      } else if (ws[0] == "gossip") {
        s_.gossip_period = integer(ws[1]);
        if (*s_.gossip_period <= 0) fail("gossip period must be positive", ErrorCode::ValidationError);
      } else {
        fail("unknown run setting '" + ws[0] + "'");
      }
    }
  }

  void register_line(const std::string& line, const std::vector<std::string>& ws) {
    if (ws.size() < 2 || ws[0] != "register") fail("expected 'register <id> ...'");
    auto policy_at = line.find("policy=");
    if (policy_at == std::string::npos) fail("register needs policy=<policy>");
    auto f = fields(words(line.substr(0, policy_at)), 2);
    RegisterDecl r;
    r.id = RegisterId{ws[1]};
    for (const auto& key : {"kind", "primary", "replicas"}) {
      if (!f.contains(key)) fail(std::string("register needs ") + key + "=");
    }
    auto kind = kind_from_name(f["kind"]);
    if (!kind) fail("unknown kind '" + f["kind"] + "'", ErrorCode::ValidationError);
    r.kind = *kind;
    r.primary = node(f["primary"]);
    r.replicas = node_list(f["replicas"]);
    r.policy = policy(line.substr(policy_at + 7));
    if (s_.find_register(r.id)) fail("duplicate register " + r.id.name, ErrorCode::ValidationError);
    s_.registers.push_back(std::move(r));
  }

  Policy policy(const std::string& text) const {
    try {
      return parse_policy(text);
    } catch (const Error& e) {
      fail(e.what(), ErrorCode::ValidationError);
    }
  }

  void workload_line(const std::string& line, const std::vector<std::string>& ws) {
    if (ws.size() < 4 || ws[0] != "at") fail("expected 'at <ms> node <n> [deadline=<ms>] <program>'");
    Millis at = integer(ws[1]);
    if (ws[2] == "reconfigure") {
      auto pos = line.find(ws[3], line.find("reconfigure") + 11);
      Reconfiguration rc{at, RegisterId{ws[3]}, policy(line.substr(pos + ws[3].size()))};
      s_.reconfigurations.push_back(std::move(rc));
      return;
    }
    if (ws[2] != "node") fail("expected 'node' or 'reconfigure'");
    WorkloadOp op;
    op.at = at;
    op.node = node(ws[3]);
    auto program_at = line.find('(');
    std::string head = line.substr(0, program_at);
    auto hw = words(head);
    if (hw.size() == 5) {
      if (hw[4].rfind("deadline=", 0) != 0) fail("unexpected '" + hw[4] + "'");
      op.deadline = integer(hw[4].substr(9));
      if (*op.deadline <= 0) fail("deadline must be positive", ErrorCode::ValidationError);
    } else if (hw.size() != 4) {
      if (program_at == std::string::npos && hw.size() == 5) {
        // bare atom program handled below
      } else {
        fail("malformed workload line");
      }
    }
    if (program_at == std::string::npos) fail("missing program");
    try {
      op.program = parse_expr(line.substr(program_at));
    } catch (const Error& e) {
      fail(e.what());
    }
    s_.workload.push_back(std::move(op));
  }

  void fault_line(const std::vector<std::string>& ws) {
    if (ws.size() < 3 || ws[0] != "at") fail("expected 'at <ms> <fault>'");
    Fault f;
    f.at = integer(ws[1]);
    if (ws[2] == "partition" && ws.size() == 4) {
      PartitionConfig cfg;
      std::stringstream in(ws[3]);
      for (std::string group; std::getline(in, group, '|');) cfg.groups.push_back(node_list(group));
      f.what = PartitionFault{std::move(cfg)};
    } else if (ws[2] == "heal" && ws.size() == 3) {
      f.what = HealFault{};
    } else if (ws[2] == "crash" && ws.size() == 4) {
      f.what = CrashFault{node(ws[3])};
    } else if (ws[2] == "recover" && ws.size() == 4) {
      f.what = RecoverFault{node(ws[3])};
    } else {
      fail("unknown fault");
    }
    s_.faults.push_back(std::move(f));
  }

  [[noreturn]] void invalid(const std::string& why) const { throw Error(ErrorCode::ValidationError, why); }

  void check_node(NodeId n, const std::string& where) const {
    if (n.value >= s_.nodes) invalid(where + ": node " + std::to_string(n.value) + " does not exist");
  }

  void validate() const {
    if (s_.nodes == 0) invalid("missing [nodes] count");
    if (s_.horizon < 0) invalid("horizon must be non-negative");
    for (const auto& l : s_.link_overrides) {
      check_node(l.a, "link");
      check_node(l.b, "link");
    }
    for (const auto& r : s_.registers) {
      for (NodeId n : r.replicas) check_node(n, "register " + r.id.name);
      if (std::find(r.replicas.begin(), r.replicas.end(), r.primary) == r.replicas.end()) {
        invalid("register " + r.id.name + ": primary must be a replica");
      }
    }
    for (const auto& op : s_.workload) {
      check_node(op.node, "workload");
      if (op.at < 0 || op.at > s_.horizon) invalid("workload op at " + std::to_string(op.at) + " is outside the horizon");
      for (const auto& reg : registers_used(op.program)) {
        if (!s_.find_register(reg)) invalid("workload references undeclared register " + reg.name);
      }
      if (auto free = free_variables(op.program); !free.empty()) {
        invalid("workload program has free variable " + *free.begin());
      }
    }
    for (const auto& rc : s_.reconfigurations) {
      if (!s_.find_register(rc.reg)) invalid("reconfigure of undeclared register " + rc.reg.name);
      if (rc.at < 0 || rc.at > s_.horizon) invalid("reconfigure outside the horizon");
    }
    for (const auto& f : s_.faults) {
      if (f.at < 0 || f.at > s_.horizon) invalid("fault at " + std::to_string(f.at) + " is outside the horizon");
      if (const auto* p = std::get_if<PartitionFault>(&f.what)) {
        std::vector<bool> seen(s_.nodes, false);
        for (const auto& g : p->config.groups) {
          for (NodeId n : g) {
            check_node(n, "partition");
            if (seen[n.value]) throw Error(ErrorCode::OverlappingGroups, "node " + std::to_string(n.value) + " appears twice");
            seen[n.value] = true;
          }
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) invalid("partition groups must cover every node");
      } else if (const auto* c = std::get_if<CrashFault>(&f.what)) {
        check_node(c->node, "crash");
      } else if (const auto* r = std::get_if<RecoverFault>(&f.what)) {
        check_node(r->node, "recover");
      }
    }
  }

  Scenario s_;
  std::string section_;
  std::size_t line_ = 0;
};

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) { return detail::ScenarioParser{}.parse(text); }

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace capspace
