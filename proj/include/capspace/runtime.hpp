#pragma once

// The shared runtime: a simulated cluster whose nodes hold register replicas,
// evaluating programs whose register accesses are routed through the policy
// in force for each register.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/history.hpp"
#include "capspace/kernel.hpp"
#include "capspace/lattice.hpp"
#include "capspace/policy.hpp"
#include "capspace/replica.hpp"
#include "capspace/simnet.hpp"
#include "capspace/txn.hpp"

namespace capspace {

struct Completed {
  Value value;
  Millis finish = 0;
};
struct Blocked {
  std::string reason;
  Millis since = 0;
};
struct Failed {
  ErrorCode code = ErrorCode::TypeError;
  std::string message;
};
using Outcome = std::variant<Completed, Blocked, Failed>;

class Runtime {
 public:
  using OnDone = std::function<void(std::size_t op, const Outcome&)>;

  Runtime(std::size_t nodes, LinkModel link, std::uint64_t seed)
      : sim_(nodes, link, seed),
        store_(sim_),
        gossip_(sim_, store_,
                [this](const RegisterId& reg, Millis t) {
                  return !std::holds_alternative<AusterePolicy>(policies_.at(reg, t));
                }),
        txns_(sim_, store_) {
    store_.on_change = [this](NodeId, const RegisterId&, const LatticeValue& before, const LatticeValue& after) {
      if (!leq(before, after)) ++non_monotone_changes_;
    };
  }

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  Simulator& sim() { return sim_; }
  const Simulator& sim() const { return sim_; }
  Datastore& store() { return store_; }
  const Datastore& store() const { return store_; }
  TxnManager& txns() { return txns_; }
  AntiEntropy& gossip() { return gossip_; }
  PolicyTable& policies() { return policies_; }

  void declare(Register reg, Policy policy) {
    RegisterId id = reg.id;
    store_.declare(std::move(reg));
    policies_.declare(id, policy);
    declared_.push_back(id);
  }

  void reconfigure(const RegisterId& reg, Policy policy, Millis at) { policies_.reconfigure(reg, std::move(policy), at); }

  void start_gossip(Millis period, Millis until) { gossip_.start_gossip(period, until); }

  /// Schedules `program` to be evaluated at `node` at time `at`. Returns the
  /// operation id used in the history.
  std::size_t invoke(ExprPtr program, NodeId node, Millis at, std::optional<Millis> deadline = std::nullopt,
                     OnDone done = {}) {
    auto op = std::make_shared<Op>(Op{ops_.size(), node, program, Machine(program), std::move(done)});
    OpRecord rec;
    rec.id = op->id;
    rec.node = node;
    rec.invoked = at;
    rec.deadline = deadline;
    rec.value = "pending";
    rec.policy = "-";
    rec.program = render(program);
    ops_.push_back(std::move(rec));
    in_flight_.push_back(op);
    sim_.schedule_workload(node, "op=" + std::to_string(op->id) + " " + ops_[op->id].program, at,
                           [this, op] { start(op); });
    return op->id;
  }

  std::size_t run_until(Millis t) { return sim_.run_until(t); }

  /// Marks everything still waiting as blocked at `horizon`.
  void finalize(Millis horizon) {
    horizon_ = horizon;
    for (const auto& op : in_flight_) {
      if (op->finished) continue;
      OpRecord& rec = ops_[op->id];
      rec.outcome = OutcomeKind::Blocked;
      rec.value = op->blocked_reason.empty() ? "not started" : op->blocked_reason;
      outcomes_[op->id] = Blocked{rec.value, op->blocked_since};
    }
  }

  std::optional<Outcome> outcome(std::size_t op) const {
    auto it = outcomes_.find(op);
    if (it == outcomes_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<OpRecord>& ops() const { return ops_; }
  const std::vector<AccessRecord>& accesses() const { return accesses_; }
  std::size_t non_monotone_changes() const { return non_monotone_changes_; }

  History history() const {
    History h;
    h.horizon = horizon_;
    for (const auto& id : declared_) {
      h.registers.push_back({store_.reg(id), render(policies_.at(id, 0))});
    }
    h.ops = ops_;
    h.accesses = accesses_;
    h.txns = txns_.committed();
    h.updates = store_.update_log();
    for (const auto& id : declared_) {
      for (NodeId n : store_.reg(id).replicas) h.states.push_back({n, id, store_.value(n, id)});
      const ConvergenceStatus& cs = store_.convergence().at(id);
      h.convergence.push_back({id, cs.last_update, cs.converged_since});
    }
    return h;
  }

 private:
  struct Op {
    std::size_t id;
    NodeId node;
    ExprPtr program;
    Machine machine;
    OnDone done;
    bool finished = false;
    std::optional<Millis> served_age;
    std::string blocked_reason;
    Millis blocked_since = 0;
  };
  using OpPtr = std::shared_ptr<Op>;

  void start(const OpPtr& op) {
    if (auto free = free_variables(op->program); !free.empty()) {
      fail(op, ErrorCode::UnboundVariable, "unbound variable " + *free.begin());
      return;
    }
    for (const auto& reg : registers_used(op->program)) {
      if (!store_.has_register(reg)) {
        fail(op, ErrorCode::UnboundRegister, "unknown register " + reg.name);
        return;
      }
    }
    if (!sim_.is_up(op->node)) {
      fail(op, ErrorCode::NodeDown, "node " + std::to_string(op->node.value) + " is down");
      return;
    }
    drive(op);
  }

  void drive(const OpPtr& op) {
    while (true) {
      switch (op->machine.run()) {
        case Machine::Status::Done: complete(op); return;
        case Machine::Status::Failed: fail(op, op->machine.error_code(), op->machine.error_message()); return;
        case Machine::Status::Suspended:
          if (!interpose(op)) return;
          break;
        case Machine::Status::Running: return;
      }
    }
  }

  void complete(const OpPtr& op) {
    op->finished = true;
    OpRecord& rec = ops_[op->id];
    rec.outcome = OutcomeKind::Completed;
    rec.responded = sim_.now();
    rec.value = render(op->machine.result());
    rec.served_age = op->served_age;
    Outcome out = Completed{op->machine.result(), sim_.now()};
    outcomes_[op->id] = out;
    if (op->done) op->done(op->id, out);
  }

  void fail(const OpPtr& op, ErrorCode code, std::string message) {
    op->finished = true;
    OpRecord& rec = ops_[op->id];
    rec.outcome = OutcomeKind::Failed;
    rec.responded = sim_.now();
    rec.value = std::string(to_string(code));
    Outcome out = Failed{code, std::move(message)};
    outcomes_[op->id] = out;
    if (op->done) op->done(op->id, out);
  }

  std::size_t open_access(const OpPtr& op, const AccessRequest& req, const Policy& policy) {
    AccessRecord rec;
    rec.op = op->id;
    rec.reg = req.reg;
    rec.access = req.access;
    rec.start = sim_.now();
    rec.policy = render(policy);
    accesses_.push_back(std::move(rec));
    if (ops_[op->id].policy == "-") ops_[op->id].policy = render(policy);
    return accesses_.size() - 1;
  }

  /// Finishes an access and resumes the machine with `value`.
  void serve(const OpPtr& op, std::size_t access, Value value, std::optional<Millis> age) {
    AccessRecord& rec = accesses_[access];
    rec.end = sim_.now();
    rec.outcome = OutcomeKind::Completed;
    rec.served_age = age;
    if (age) op->served_age = std::max(op->served_age.value_or(0), *age);
    op->blocked_reason.clear();
    op->machine.resume(std::move(value));
  }

  void fail_access(const OpPtr& op, std::size_t access, ErrorCode code, std::string message) {
    accesses_[access].end = sim_.now();
    accesses_[access].outcome = OutcomeKind::Failed;
    fail(op, code, std::move(message));
  }

  void block(const OpPtr& op, std::string reason) {
    op->blocked_reason = std::move(reason);
    op->blocked_since = sim_.now();
  }

  /// Runs the policy's plan for the pending access. Returns true when the
  /// machine was resumed synchronously and evaluation can continue.
  bool interpose(const OpPtr& op) {
    const AccessRequest req = op->machine.pending();
    const Register& reg = store_.reg(req.reg);
    const Millis now = sim_.now();
    const Policy& policy = policies_.at(req.reg, now);
    std::size_t access = open_access(op, req, policy);
    if (!reg.has_replica(op->node)) {
      fail_access(op, access, ErrorCode::NotAReplica,
                  "node " + std::to_string(op->node.value) + " does not replicate " + req.reg.name);
      return false;
    }
    if (req.access == Access::Write) {
      UpdateOp update = bind_update(req, actor_of(op->node), now);
      if (!valid_for(reg.kind, update)) {
        fail_access(op, access, ErrorCode::InvalidOp,
                    std::string(op_name(update)) + " on " + std::string(kind_name(reg.kind)));
        return false;
      }
      ResumePlan plan = decide_on_store(policy);
      if (std::holds_alternative<ResumeNow>(plan)) {
        LatticeValue next = store_.local_update(op->node, req.reg, update, now);
        serve(op, access, from_observable(query(next)), std::nullopt);
        return true;
      }
      run_txn(op, access, policy, TxnWrite{req.reg, update});
      return false;
    }

    AccessContext ctx{op->node == reg.primary, store_.age(op->node, req.reg, now)};
    ResumePlan plan = decide_on_deref(policy, ctx, now);
    if (std::holds_alternative<ResumeNow>(plan)) {
      ReadResult r = store_.local_read(op->node, req.reg, now);
      serve(op, access, from_observable(r.value), r.age);
      return true;
    }
    if (const auto* after = std::get_if<ResumeAfter>(&plan)) {
      if (after->sync == SyncKind::ReadTxn) {
        run_txn(op, access, policy, TxnRead{req.reg});
        return false;
      }
      block(op, "awaiting refresh of " + req.reg.name);
      gossip_.refresh_from_primary(
          op->node, req.reg,
          [this, op, access, reg_id = req.reg](Millis t) {
            ReadResult r = store_.local_read(op->node, reg_id, t);
            serve(op, access, from_observable(r.value), r.age);
            drive(op);
          },
          /*retry=*/true);
      return false;
    }

    const auto deadline = std::get<ResumeAtDeadline>(plan);
    auto resolved = std::make_shared<bool>(false);
    block(op, "awaiting refresh of " + req.reg.name);
    gossip_.refresh_from_primary(
        op->node, req.reg,
        [this, op, access, resolved, reg_id = req.reg](Millis t) {
          if (*resolved) return;
          *resolved = true;
          ReadResult r = store_.local_read(op->node, reg_id, t);
          serve(op, access, from_observable(r.value), r.age);
          drive(op);
        },
        /*retry=*/false);
    sim_.schedule_timer(op->node, "latency-bound op=" + std::to_string(op->id), deadline.deadline,
                        [this, op, access, resolved, deadline, reg_id = req.reg] {
                          if (*resolved) return;
                          *resolved = true;
                          ReadResult r = store_.local_read(op->node, reg_id, sim_.now());
                          if (deadline.staleness_gate && r.age > *deadline.staleness_gate) {
                            fail_access(op, access, ErrorCode::StalenessUnsatisfiable,
                                        "cached " + reg_id.name + " is " + std::to_string(r.age) + " ms old");
                            return;
                          }
                          serve(op, access, from_observable(r.value), r.age);
                          drive(op);
                        });
    return false;
  }

  void run_txn(const OpPtr& op, std::size_t access, const Policy& policy, TxnOp txn_op) {
    const auto& austere = std::get<AusterePolicy>(policy);
    RegisterId reg = register_of(txn_op);
    bool is_read = std::holds_alternative<TxnRead>(txn_op);
    TxnId id = txns_.submit(op->node, {std::move(txn_op)}, austere.mode, austere.deadline,
                            [this, op, access, reg, is_read](const TxnResult& result) {
                              if (!result.committed) {
                                fail_access(op, access, ErrorCode::Aborted, result.abort_reason);
                                return;
                              }
                              Observable value = is_read ? result.reads.front() : query(result.final_states.at(reg));
                              serve(op, access, from_observable(value), is_read ? std::optional<Millis>{0} : std::nullopt);
                              drive(op);
                            });
    if (!op->finished && txns_.phase(id) != TxnPhase::Committed) block(op, "awaiting txn " + std::to_string(id));
  }

  Simulator sim_;
  Datastore store_;
  PolicyTable policies_;
  AntiEntropy gossip_;
  TxnManager txns_;
  std::vector<RegisterId> declared_;
  std::vector<OpRecord> ops_;
  std::vector<AccessRecord> accesses_;
  std::vector<OpPtr> in_flight_;
  std::map<std::size_t, Outcome> outcomes_;
  std::size_t non_monotone_changes_ = 0;
  Millis horizon_ = 0;
};

}  // namespace capspace
