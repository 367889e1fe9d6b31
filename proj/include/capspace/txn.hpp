#pragma once

// Strict two-phase locking over every replica of every touched register,
// followed by two-phase commit. Registers are locked in ascending id order and,
// within a register, at the primary before the other replicas; holding a
// replica lock implies holding the primary's lock in the same mode, so the
// primary serializes conflicting transactions and no wait cycle can form.
//
// Lock grants carry the participant's current state. The coordinator joins
// the granted states, runs the transaction's operations against the join, and
// ships the resulting states in COMMIT; participants merge them, so applying a
// decision twice has no further effect.

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/lattice.hpp"
#include "capspace/replica.hpp"
#include "capspace/simnet.hpp"

namespace capspace {

using TxnId = std::uint64_t;

struct TxnRead {
  RegisterId reg;
  friend bool operator==(const TxnRead&, const TxnRead&) = default;
};
struct TxnWrite {
  RegisterId reg;
  UpdateOp op;
  friend bool operator==(const TxnWrite&, const TxnWrite&) = default;
};
using TxnOp = std::variant<TxnRead, TxnWrite>;

inline const RegisterId& register_of(const TxnOp& op) {
  return std::visit([](const auto& o) -> const RegisterId& { return o.reg; }, op);
}

enum class TxnMode { Pure, Measured };

enum class TxnPhase { Init, Locking, Preparing, Committed, Aborted };

inline std::string_view phase_name(TxnPhase p) {
  switch (p) {
    case TxnPhase::Init: return "init";
    case TxnPhase::Locking: return "locking";
    case TxnPhase::Preparing: return "preparing";
    case TxnPhase::Committed: return "committed";
    case TxnPhase::Aborted: return "aborted";
  }
  return "?";
}

enum class LockMode { Shared, Exclusive };

struct TxnResult {
  TxnId id = 0;
  bool committed = false;
  Millis decided_at = 0;
  std::vector<Observable> reads;                   // one per TxnRead, in op order
  std::map<RegisterId, LatticeValue> final_states;  // per touched register
  std::string abort_reason;
};

/// A committed transaction as the serializability checker sees it.
struct CommittedTxn {
  TxnId id = 0;
  NodeId coordinator;
  Millis decided_at = 0;
  std::vector<TxnOp> ops;
  std::vector<Observable> reads;
};

/// Lock state of one register at one node.
struct LockEntry {
  struct Request {
    TxnId txn;
    LockMode mode;
    NodeId coordinator;
  };
  LockMode mode = LockMode::Shared;
  std::set<TxnId> holders;
  std::deque<Request> waiters;
};

class LockTable {
 public:
  /// Returns true if the lock is held by `txn` after the call.
  bool request(const RegisterId& reg, TxnId txn, LockMode mode, NodeId coordinator) {
    LockEntry& e = entries_[reg];
    if (e.holders.contains(txn)) return true;
    for (const auto& w : e.waiters) {
      if (w.txn == txn) return false;
    }
    if (compatible(e, mode) && e.waiters.empty()) {
      grant(e, txn, mode);
      return true;
    }
    e.waiters.push_back({txn, mode, coordinator});
    return false;
  }

  bool holds(const RegisterId& reg, TxnId txn) const {
    auto it = entries_.find(reg);
    return it != entries_.end() && it->second.holders.contains(txn);
  }

  /// Releases everything `txn` holds or waits for; returns the newly granted
  /// requests in grant order.
  std::vector<std::pair<RegisterId, LockEntry::Request>> release(TxnId txn) {
    std::vector<std::pair<RegisterId, LockEntry::Request>> granted;
    for (auto& [reg, e] : entries_) {
      e.holders.erase(txn);
      std::erase_if(e.waiters, [&](const LockEntry::Request& r) { return r.txn == txn; });
      while (!e.waiters.empty() && compatible(e, e.waiters.front().mode)) {
        auto req = e.waiters.front();
        e.waiters.pop_front();
        grant(e, req.txn, req.mode);
        granted.emplace_back(reg, req);
      }
    }
    return granted;
  }

  /// Fault injection: forget that `txn` holds anything here.
  void forget(TxnId txn) {
    for (auto& [reg, e] : entries_) e.holders.erase(txn);
  }

  std::size_t held_count() const {
    std::size_t n = 0;
    for (const auto& [reg, e] : entries_) n += e.holders.size();
    return n;
  }

  const std::map<RegisterId, LockEntry>& entries() const { return entries_; }

 private:
  static bool compatible(const LockEntry& e, LockMode mode) {
    if (e.holders.empty()) return true;
    return e.mode == LockMode::Shared && mode == LockMode::Shared;
  }

  static void grant(LockEntry& e, TxnId txn, LockMode mode) {
    if (e.holders.empty()) e.mode = mode;
    e.holders.insert(txn);
  }

  std::map<RegisterId, LockEntry> entries_;
};

inline std::string render(const TxnOp& op) {
  if (const auto* r = std::get_if<TxnRead>(&op)) return "read(" + r->reg.name + ")";
  const auto& w = std::get<TxnWrite>(op);
  return "write(" + w.reg.name + "," + render(w.op) + ")";
}

class TxnManager {
 public:
  using Done = std::function<void(const TxnResult&)>;

  TxnManager(Simulator& sim, Datastore& store) : sim_(&sim), store_(&store) {}

  /// Starts a transaction at `coordinator` now. `deadline` (measured mode)
  /// is relative to now; past it an undecided transaction aborts.
  TxnId submit(NodeId coordinator, std::vector<TxnOp> ops, TxnMode mode, std::optional<Millis> deadline, Done done) {
    if (ops.empty()) throw Error(ErrorCode::InvalidOp, "empty transaction");
    auto t = std::make_shared<Txn>();
    t->id = ++next_id_;
    t->coordinator = coordinator;
    t->ops = std::move(ops);
    t->mode = mode;
    t->done = std::move(done);
    t->started_at = sim_->now();
    for (const auto& op : t->ops) {
      const Register& r = store_->reg(register_of(op));
      if (const auto* w = std::get_if<TxnWrite>(&op)) {
        if (!valid_for(r.kind, w->op)) detail::invalid_op(r.kind, op_name(w->op));
        t->modes[r.id] = LockMode::Exclusive;
      } else {
        t->modes.try_emplace(r.id, LockMode::Shared);
      }
    }
    for (const auto& [reg, mode_] : t->modes) {
      const Register& r = store_->reg(reg);
      t->steps.push_back({{r.primary, reg}});
      std::vector<std::pair<NodeId, RegisterId>> rest;
      for (NodeId n : r.replicas) {
        if (n != r.primary) rest.emplace_back(n, reg);
      }
      if (!rest.empty()) t->steps.push_back(std::move(rest));
      for (NodeId n : r.replicas) t->participants.insert(n);
    }
    txns_[t->id] = t;
    if (mode == TxnMode::Measured && deadline) {
      sim_->schedule_timer(coordinator, "txn-deadline txn=" + std::to_string(t->id), sim_->now() + *deadline,
                           [this, t] {
                             if (t->phase == TxnPhase::Locking || t->phase == TxnPhase::Preparing) {
                               decide_abort(*t, "deadline");
                             }
                           });
    }
    t->phase = TxnPhase::Locking;
    lock_step(*t);
    schedule_retry(t);
    return t->id;
  }

  TxnPhase phase(TxnId id) const { return txns_.at(id)->phase; }
  const std::vector<CommittedTxn>& committed() const { return committed_; }
  const LockTable& locks(NodeId node) { return lock_tables_[node]; }
  bool in_flight() const {
    return std::any_of(txns_.begin(), txns_.end(), [](const auto& kv) { return !kv.second->finished(); });
  }

  /// Fault injection: `node` loses its lock state for `txn`, so it will vote NO.
  void lose_locks(NodeId node, TxnId txn) { lock_tables_[node].forget(txn); }

  Millis retry_interval() const { return 2 * sim_->max_latency() + 1; }

 private:
  struct Txn {
    TxnId id = 0;
    NodeId coordinator;
    std::vector<TxnOp> ops;
    TxnMode mode = TxnMode::Pure;
    Done done;
    Millis started_at = 0;
    TxnPhase phase = TxnPhase::Init;
    std::map<RegisterId, LockMode> modes;
    std::vector<std::vector<std::pair<NodeId, RegisterId>>> steps;
    std::size_t step = 0;
    std::map<std::pair<NodeId, RegisterId>, LatticeValue> grants;
    std::set<NodeId> participants;
    std::set<NodeId> votes;
    std::set<NodeId> acks;
    std::map<RegisterId, LatticeValue> final_states;
    std::string abort_reason;

    bool decided() const { return phase == TxnPhase::Committed || phase == TxnPhase::Aborted; }
    bool finished() const { return decided() && acks.size() == participants.size(); }
  };

  using TxnPtr = std::shared_ptr<Txn>;

  static std::string mode_name(LockMode m) { return m == LockMode::Exclusive ? "X" : "S"; }

  std::string tag(const Txn& t) const { return "txn=" + std::to_string(t.id); }

  // Coordinator -----------------------------------------------------------

  void lock_step(Txn& t) {
    for (const auto& [node, reg] : t.steps[t.step]) {
      if (!t.grants.contains({node, reg})) send_lock(t, node, reg);
    }
  }

  void send_lock(Txn& t, NodeId node, const RegisterId& reg) {
    LockMode mode = t.modes.at(reg);
    TxnId id = t.id;
    NodeId coord = t.coordinator;
    sim_->send(coord, node, "LOCK " + tag(t) + " reg=" + reg.name + " mode=" + mode_name(mode),
               [this, id, coord, node, reg, mode] { participant_on_lock(node, id, coord, reg, mode); });
  }

  void on_grant(TxnId id, NodeId node, const RegisterId& reg, const LatticeValue& state) {
    Txn& t = *txns_.at(id);
    if (t.phase != TxnPhase::Locking) return;
    t.grants.emplace(std::make_pair(node, reg), state);
    const auto& step = t.steps[t.step];
    bool complete = std::all_of(step.begin(), step.end(), [&](const auto& p) { return t.grants.contains(p); });
    if (!complete) return;
    if (++t.step < t.steps.size()) {
      lock_step(t);
      return;
    }
    t.phase = TxnPhase::Preparing;
    for (NodeId n : t.participants) send_prepare(t, n);
  }

  std::vector<RegisterId> registers_at(const Txn& t, NodeId node) const {
    std::vector<RegisterId> out;
    for (const auto& [reg, mode] : t.modes) {
      if (store_->reg(reg).has_replica(node)) out.push_back(reg);
    }
    return out;
  }

  void send_prepare(Txn& t, NodeId node) {
    auto regs = registers_at(t, node);
    std::string names;
    for (const auto& r : regs) names += (names.empty() ? "" : ",") + r.name;
    TxnId id = t.id;
    NodeId coord = t.coordinator;
    sim_->send(coord, node, "PREPARE " + tag(t) + " regs=" + names,
               [this, id, coord, node, regs] { participant_on_prepare(node, id, coord, regs); });
  }

  void on_vote(TxnId id, NodeId node, bool yes) {
    Txn& t = *txns_.at(id);
    if (t.phase != TxnPhase::Preparing) return;
    if (!yes) {
      decide_abort(t, "participant " + std::to_string(node.value) + " voted no");
      return;
    }
    t.votes.insert(node);
    if (t.votes.size() == t.participants.size()) decide_commit(t);
  }

  void decide_commit(Txn& t) {
    std::map<RegisterId, LatticeValue> current;
    for (const auto& [key, state] : t.grants) {
      auto [it, inserted] = current.try_emplace(key.second, state);
      if (!inserted) it->second = merge(it->second, state);
    }
    TxnResult result;
    result.id = t.id;
    result.committed = true;
    result.decided_at = sim_->now();
    std::set<RegisterId> written;
    for (const auto& op : t.ops) {
      if (const auto* r = std::get_if<TxnRead>(&op)) {
        result.reads.push_back(query(current.at(r->reg)));
      } else {
        const auto& w = std::get<TxnWrite>(op);
        current.at(w.reg) = update(current.at(w.reg), w.op);
        written.insert(w.reg);
      }
    }
    for (const auto& reg : written) t.final_states[reg] = current.at(reg);
    result.final_states = current;
    t.phase = TxnPhase::Committed;
    for (const auto& op : t.ops) {
      if (const auto* w = std::get_if<TxnWrite>(&op)) {
        store_->log_update(t.coordinator, w->reg, w->op, t.final_states.at(w->reg), sim_->now());
      }
    }
    committed_.push_back(CommittedTxn{t.id, t.coordinator, result.decided_at, t.ops, result.reads});
    for (NodeId n : t.participants) send_decision(t, n);
    if (t.done) t.done(result);
  }

  void decide_abort(Txn& t, std::string reason) {
    t.phase = TxnPhase::Aborted;
    t.abort_reason = std::move(reason);
    for (NodeId n : t.participants) send_decision(t, n);
    TxnResult result;
    result.id = t.id;
    result.committed = false;
    result.decided_at = sim_->now();
    result.abort_reason = t.abort_reason;
    if (t.done) t.done(result);
  }

  void send_decision(Txn& t, NodeId node) {
    TxnId id = t.id;
    NodeId coord = t.coordinator;
    bool commit = t.phase == TxnPhase::Committed;
    std::ostringstream text;
    text << (commit ? "COMMIT " : "ABORT ") << tag(t);
    std::map<RegisterId, LatticeValue> states;
    if (commit) {
      for (const auto& [reg, value] : t.final_states) {
        if (store_->reg(reg).has_replica(node)) {
          states.emplace(reg, value);
          text << ' ' << reg.name << '=' << render(value);
        }
      }
    }
    sim_->send(coord, node, text.str(), [this, id, coord, node, commit, states = std::move(states)] {
      participant_on_decision(node, id, coord, commit, states);
    });
  }

  void on_ack(TxnId id, NodeId node) { txns_.at(id)->acks.insert(node); }

  void schedule_retry(const TxnPtr& t) {
    sim_->schedule_timer(t->coordinator, "txn-retry " + tag(*t), sim_->now() + retry_interval(), [this, t] {
      switch (t->phase) {
        case TxnPhase::Locking: lock_step(*t); break;
        case TxnPhase::Preparing:
          for (NodeId n : t->participants) {
            if (!t->votes.contains(n)) send_prepare(*t, n);
          }
          break;
        case TxnPhase::Committed:
        case TxnPhase::Aborted:
          for (NodeId n : t->participants) {
            if (!t->acks.contains(n)) send_decision(*t, n);
          }
          break;
        case TxnPhase::Init: break;
      }
      if (!t->finished()) schedule_retry(t);
    });
  }

  // Participants ----------------------------------------------------------

  void participant_on_lock(NodeId node, TxnId id, NodeId coord, const RegisterId& reg, LockMode mode) {
    if (finished_at_[node].contains(id)) return;
    if (lock_tables_[node].request(reg, id, mode, coord)) send_grant(node, id, coord, reg);
  }

  void send_grant(NodeId node, TxnId id, NodeId coord, const RegisterId& reg) {
    LatticeValue state = store_->value(node, reg);
    sim_->send(node, coord, "GRANT txn=" + std::to_string(id) + " reg=" + reg.name + " state=" + render(state),
               [this, id, node, reg, state] { on_grant(id, node, reg, state); });
  }

  void participant_on_prepare(NodeId node, TxnId id, NodeId coord, const std::vector<RegisterId>& regs) {
    const LockTable& table = lock_tables_[node];
    bool yes = sim_->is_up(node) &&
               std::all_of(regs.begin(), regs.end(), [&](const RegisterId& r) { return table.holds(r, id); });
    sim_->send(node, coord, "VOTE txn=" + std::to_string(id) + (yes ? " vote=yes" : " vote=no"),
               [this, id, node, yes] { on_vote(id, node, yes); });
  }

  void participant_on_decision(NodeId node, TxnId id, NodeId coord, bool commit,
                               const std::map<RegisterId, LatticeValue>& states) {
    if (!finished_at_[node].contains(id)) {
      finished_at_[node].insert(id);
      if (commit) {
        for (const auto& [reg, value] : states) store_->merge_into(node, reg, value, sim_->now());
      }
      for (const auto& [reg, req] : lock_tables_[node].release(id)) send_grant(node, req.txn, req.coordinator, reg);
    }
    sim_->send(node, coord, "ACK txn=" + std::to_string(id), [this, id, node] { on_ack(id, node); });
  }

  Simulator* sim_;
  Datastore* store_;
  TxnId next_id_ = 0;
  std::map<TxnId, TxnPtr> txns_;
  std::map<NodeId, LockTable> lock_tables_;
  std::map<NodeId, std::set<TxnId>> finished_at_;
  std::vector<CommittedTxn> committed_;
};

}  // namespace capspace
