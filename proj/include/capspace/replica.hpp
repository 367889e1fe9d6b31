#pragma once

// Per-node datastore of named registers, plus the anti-entropy sessions and
// primary refreshes that move state between replicas.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/lattice.hpp"
#include "capspace/simnet.hpp"

namespace capspace {

struct Register {
  RegisterId id;
  Kind kind = Kind::GCounter;
  NodeId primary;
  std::vector<NodeId> replicas;  // sorted, contains primary

  bool has_replica(NodeId node) const { return std::binary_search(replicas.begin(), replicas.end(), node); }
};

struct ReplicaState {
  LatticeValue value;
  std::map<NodeId, Millis> last_sync;  // peer -> completion time of last sync
};

/// One entry of the update log: the state a replica held right after an
/// update was applied. Folding every `result` gives the convergence oracle.
struct UpdateRecord {
  Millis time = 0;
  NodeId node;
  RegisterId reg;
  UpdateOp op;
  LatticeValue result;
};

struct ReadResult {
  Observable value;
  Millis age = 0;
};

/// Tracks, per register, when all replicas last became identical.
struct ConvergenceStatus {
  std::optional<Millis> last_update;
  std::optional<Millis> converged_since;
};

class Datastore {
 public:
  explicit Datastore(const Simulator& sim) : sim_(&sim) {}

  void declare(Register reg) {
    std::sort(reg.replicas.begin(), reg.replicas.end());
    reg.replicas.erase(std::unique(reg.replicas.begin(), reg.replicas.end()), reg.replicas.end());
    if (reg.replicas.empty() || !reg.has_replica(reg.primary)) {
      throw Error(ErrorCode::ValidationError, "primary of " + reg.id.name + " must be one of its replicas");
    }
    for (NodeId node : reg.replicas) {
      if (node.value >= sim_->node_count()) {
        throw Error(ErrorCode::InvalidNode, "replica " + std::to_string(node.value) + " of " + reg.id.name);
      }
    }
    if (registers_.contains(reg.id)) throw Error(ErrorCode::ValidationError, "duplicate register " + reg.id.name);
    for (NodeId node : reg.replicas) {
      ReplicaState state{LatticeValue::bottom(reg.kind), {}};
      // Every replica starts at bottom, i.e. in sync with everyone at t=0.
      for (NodeId peer : reg.replicas) {
        if (peer != node) state.last_sync[peer] = 0;
      }
      states_[{node, reg.id}] = std::move(state);
    }
    convergence_[reg.id] = ConvergenceStatus{std::nullopt, Millis{0}};
    registers_.emplace(reg.id, std::move(reg));
  }

  bool has_register(const RegisterId& id) const { return registers_.contains(id); }

  const Register& reg(const RegisterId& id) const {
    auto it = registers_.find(id);
    if (it == registers_.end()) throw Error(ErrorCode::UnboundRegister, id.name);
    return it->second;
  }

  const std::map<RegisterId, Register>& registers() const { return registers_; }

  const ReplicaState& state(NodeId node, const RegisterId& id) const {
    auto it = states_.find({node, id});
    if (it == states_.end()) {
      reg(id);
      throw Error(ErrorCode::NotAReplica, "node " + std::to_string(node.value) + " does not replicate " + id.name);
    }
    return it->second;
  }

  const LatticeValue& value(NodeId node, const RegisterId& id) const { return state(node, id).value; }

  /// Applies an update to the local replica only.
  LatticeValue local_update(NodeId node, const RegisterId& id, const UpdateOp& op, Millis now) {
    ReplicaState& st = mutable_state(node, id);
    if (!sim_->is_up(node)) throw Error(ErrorCode::NodeDown, "node " + std::to_string(node.value));
    LatticeValue next = update(st.value, op);
    log_.push_back(UpdateRecord{now, node, id, op, next});
    convergence_[id].last_update = now;
    set_value(node, id, st, std::move(next), now);
    return st.value;
  }

  /// Age is the time since the last completed sync with the primary; the
  /// primary itself, and single-replica registers, are never stale.
  ReadResult local_read(NodeId node, const RegisterId& id, Millis now) const {
    const ReplicaState& st = state(node, id);
    return ReadResult{query(st.value), age(node, id, now)};
  }

  Millis age(NodeId node, const RegisterId& id, Millis now) const {
    const Register& r = reg(id);
    const ReplicaState& st = state(node, id);
    if (node == r.primary || r.replicas.size() == 1) return 0;
    return now - st.last_sync.at(r.primary);
  }

  /// Joins `incoming` into the local replica. Replicas only ever move up.
  void merge_into(NodeId node, const RegisterId& id, const LatticeValue& incoming, Millis now) {
    ReplicaState& st = mutable_state(node, id);
    LatticeValue next = merge(st.value, incoming);
    if (next != st.value) set_value(node, id, st, std::move(next), now);
  }

  void mark_synced(NodeId node, const RegisterId& id, NodeId peer, Millis at) {
    ReplicaState& st = mutable_state(node, id);
    Millis& slot = st.last_sync[peer];
    slot = std::max(slot, at);
  }

  /// Records a write whose effect was produced elsewhere (a committed
  /// transaction); `result` is the committed state.
  void log_update(NodeId node, const RegisterId& id, const UpdateOp& op, const LatticeValue& result, Millis now) {
    log_.push_back(UpdateRecord{now, node, id, op, result});
    ConvergenceStatus& cs = convergence_[id];
    cs.last_update = now;
    if (cs.converged_since && replicas_identical(id)) cs.converged_since = now;
  }

  const std::vector<UpdateRecord>& update_log() const { return log_; }
  const std::map<RegisterId, ConvergenceStatus>& convergence() const { return convergence_; }

  bool replicas_identical(const RegisterId& id) const {
    const Register& r = reg(id);
    const LatticeValue& first = value(r.replicas.front(), id);
    return std::all_of(r.replicas.begin(), r.replicas.end(),
                       [&](NodeId n) { return value(n, id) == first; });
  }

  /// Test hook: overwrite a replica without the lattice discipline.
  void corrupt_for_test(NodeId node, const RegisterId& id, LatticeValue v) { mutable_state(node, id).value = std::move(v); }

  /// Called after every change of a replica value, with the previous value.
  std::function<void(NodeId, const RegisterId&, const LatticeValue& before, const LatticeValue& after)> on_change;

 private:
  ReplicaState& mutable_state(NodeId node, const RegisterId& id) {
    return const_cast<ReplicaState&>(std::as_const(*this).state(node, id));
  }

  void set_value(NodeId node, const RegisterId& id, ReplicaState& st, LatticeValue next, Millis now) {
    LatticeValue before = std::exchange(st.value, std::move(next));
    ConvergenceStatus& cs = convergence_[id];
    if (replicas_identical(id)) {
      // An update that changed nothing still restarts the clock.
      if (!cs.converged_since || (cs.last_update && *cs.converged_since < *cs.last_update)) cs.converged_since = now;
    } else {
      cs.converged_since.reset();
    }
    if (on_change) on_change(node, id, before, st.value);
  }

  const Simulator* sim_;
  std::map<RegisterId, Register> registers_;
  std::map<std::pair<NodeId, RegisterId>, ReplicaState> states_;
  std::map<RegisterId, ConvergenceStatus> convergence_;
  std::vector<UpdateRecord> log_;
};

/// Full-state anti-entropy. A session from a to b is two messages: a pushes
/// its states, b merges and answers with its merged states, a merges. Lost
/// messages simply leave the session incomplete.
class AntiEntropy {
 public:
  using Completion = std::function<void(Millis)>;
  using Eligible = std::function<bool(const RegisterId&, Millis)>;

  AntiEntropy(Simulator& sim, Datastore& store, Eligible eligible = {})
      : sim_(&sim), store_(&store), eligible_(std::move(eligible)) {}

  std::size_t sessions_started() const { return started_; }
  std::size_t sessions_completed() const { return completed_; }

  /// Registers replicated by both a and b that gossip may carry right now.
  std::vector<RegisterId> shared_registers(NodeId a, NodeId b) const {
    std::vector<RegisterId> out;
    for (const auto& [id, r] : store_->registers()) {
      if (r.has_replica(a) && r.has_replica(b) && (!eligible_ || eligible_(id, sim_->now()))) out.push_back(id);
    }
    return out;
  }

  void session(NodeId a, NodeId b, std::vector<RegisterId> regs, Completion done = {}) {
    if (a == b) throw Error(ErrorCode::InvalidNode, "anti-entropy needs two distinct nodes");
    if (regs.empty()) return;
    ++started_;
    auto id = started_;
    sim_->send(a, b, "AE-PUSH session=" + std::to_string(id) + ' ' + snapshot_text(a, regs),
               [this, a, b, id, regs, states = snapshot(a, regs), done = std::move(done)]() mutable {
                 Millis t = sim_->now();
                 for (std::size_t i = 0; i < regs.size(); ++i) {
                   store_->merge_into(b, regs[i], states[i], t);
                   store_->mark_synced(b, regs[i], a, t);
                 }
                 sim_->send(b, a, "AE-REPLY session=" + std::to_string(id) + ' ' + snapshot_text(b, regs),
                            [this, a, b, regs, states = snapshot(b, regs), done = std::move(done)] {
                              Millis t2 = sim_->now();
                              for (std::size_t i = 0; i < regs.size(); ++i) {
                                store_->merge_into(a, regs[i], states[i], t2);
                                store_->mark_synced(a, regs[i], b, t2);
                              }
                              ++completed_;
                              if (done) done(t2);
                            });
               });
  }

  /// One-shot pull of a register's state from its primary, merged locally.
  /// With `retry`, the pull is re-sent every retry interval until it lands.
  void refresh_from_primary(NodeId node, const RegisterId& id, Completion done, bool retry) {
    auto pending = std::make_shared<bool>(true);
    attempt_refresh(node, id, std::move(done), retry, pending);
  }

  /// Starts periodic gossip: every `period` ms each up node opens one session
  /// with a uniformly chosen partition-reachable peer it shares registers with.
  void start_gossip(Millis period, Millis until) {
    if (period <= 0) throw Error(ErrorCode::ValidationError, "gossip period must be positive");
    schedule_tick(period, period, until);
  }

  Millis retry_interval() const { return 2 * sim_->max_latency() + 1; }

 private:
  std::vector<LatticeValue> snapshot(NodeId node, const std::vector<RegisterId>& regs) const {
    std::vector<LatticeValue> out;
    out.reserve(regs.size());
    for (const auto& id : regs) out.push_back(store_->value(node, id));
    return out;
  }

  std::string snapshot_text(NodeId node, const std::vector<RegisterId>& regs) const {
    std::ostringstream out;
    for (std::size_t i = 0; i < regs.size(); ++i) {
      if (i) out << ' ';
      out << regs[i].name << '=' << render(store_->value(node, regs[i]));
    }
    return out.str();
  }

  void attempt_refresh(NodeId node, const RegisterId& id, Completion done, bool retry, std::shared_ptr<bool> pending) {
    const Register& r = store_->reg(id);
    NodeId primary = r.primary;
    sim_->send(node, primary, "PULL reg=" + id.name, [this, node, primary, id, done, pending] {
      if (!*pending) return;
      sim_->send(primary, node, "PULL-REPLY reg=" + id.name + " state=" + render(store_->value(primary, id)),
                 [this, node, primary, id, done, pending, state = store_->value(primary, id)] {
                   if (!*pending) return;
                   *pending = false;
                   Millis t = sim_->now();
                   store_->merge_into(node, id, state, t);
                   store_->mark_synced(node, id, primary, t);
                   if (done) done(t);
                 });
    });
    if (retry) {
      sim_->schedule_timer(node, "refresh-retry reg=" + id.name, sim_->now() + retry_interval(),
                           [this, node, id, done, pending] {
                             if (*pending) attempt_refresh(node, id, done, true, pending);
                           });
    }
  }

  void schedule_tick(Millis at, Millis period, Millis until) {
    if (at > until) return;
    sim_->schedule_timer(NodeId{0}, "gossip", at, [this, at, period, until] {
      for (std::uint32_t n = 0; n < sim_->node_count(); ++n) {
        NodeId self{n};
        if (!sim_->is_up(self)) continue;
        std::vector<NodeId> peers;
        for (std::uint32_t m = 0; m < sim_->node_count(); ++m) {
          NodeId peer{m};
          if (peer != self && sim_->same_group(self, peer) && !shared_registers(self, peer).empty()) {
            peers.push_back(peer);
          }
        }
        if (peers.empty()) continue;
        NodeId peer = peers[sim_->uniform(peers.size())];
        session(self, peer, shared_registers(self, peer));
      }
      schedule_tick(at + period, period, until);
    });
  }

  Simulator* sim_;
  Datastore* store_;
  Eligible eligible_;
  std::size_t started_ = 0;
  std::size_t completed_ = 0;
};

}  // namespace capspace
