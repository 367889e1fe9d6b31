#pragma once

// Consistency policies and the decision of what a register access must wait
// for. Decisions are pure; the runtime carries them out in the simulator.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/txn.hpp"

namespace capspace {

struct LaspPolicy {
  friend bool operator==(const LaspPolicy&, const LaspPolicy&) = default;
};

struct AusterePolicy {
  TxnMode mode = TxnMode::Pure;
  std::optional<Millis> deadline;  // measured mode only
  friend bool operator==(const AusterePolicy&, const AusterePolicy&) = default;
};

struct SpryPolicy {
  std::optional<Millis> max_staleness;
  std::optional<Millis> latency_bound;
  friend bool operator==(const SpryPolicy&, const SpryPolicy&) = default;
};

using Policy = std::variant<LaspPolicy, AusterePolicy, SpryPolicy>;

inline void validate(const Policy& p) {
  if (const auto* a = std::get_if<AusterePolicy>(&p)) {
    if (a->mode == TxnMode::Measured && (!a->deadline || *a->deadline <= 0)) {
      throw Error(ErrorCode::InvalidPolicy, "measured austere needs a positive deadline");
    }
    if (a->mode == TxnMode::Pure && a->deadline) {
      throw Error(ErrorCode::InvalidPolicy, "pure austere takes no deadline");
    }
  } else if (const auto* s = std::get_if<SpryPolicy>(&p)) {
    if (!s->max_staleness && !s->latency_bound) {
      throw Error(ErrorCode::InvalidPolicy, "spry needs a staleness or a latency bound");
    }
    if ((s->max_staleness && *s->max_staleness <= 0) || (s->latency_bound && *s->latency_bound <= 0)) {
      throw Error(ErrorCode::InvalidPolicy, "spry bounds must be positive");
    }
  }
}

inline std::string render(const Policy& p) {
  std::ostringstream out;
  if (std::holds_alternative<LaspPolicy>(p)) {
    out << "lasp";
  } else if (const auto* a = std::get_if<AusterePolicy>(&p)) {
    out << "austere mode=" << (a->mode == TxnMode::Pure ? "pure" : "measured");
    if (a->deadline) out << " deadline=" << *a->deadline;
  } else {
    const auto& s = std::get<SpryPolicy>(p);
    out << "spry";
    if (s.max_staleness) out << " staleness=" << *s.max_staleness;
    if (s.latency_bound) out << " latency=" << *s.latency_bound;
  }
  return out.str();
}

/// Parses `lasp` | `austere [mode=pure|measured] [deadline=<ms>]` |
/// `spry [staleness=<ms>] [latency=<ms>]`.
inline Policy parse_policy(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string head;
  in >> head;
  std::map<std::string, std::string> fields;
  for (std::string word; in >> word;) {
    auto eq = word.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::InvalidPolicy, "expected key=value, got '" + word + "'");
    if (!fields.emplace(word.substr(0, eq), word.substr(eq + 1)).second) {
      throw Error(ErrorCode::InvalidPolicy, "duplicate field '" + word.substr(0, eq) + "'");
    }
  }
  auto take_ms = [&](const std::string& key) -> std::optional<Millis> {
    auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    std::size_t used = 0;
    Millis v = 0;
    try {
      v = std::stoll(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size()) throw Error(ErrorCode::InvalidPolicy, key + " must be an integer");
    fields.erase(it);
    return v;
  };
  Policy out;
  if (head == "lasp") {
    out = LaspPolicy{};
  } else if (head == "austere") {
    AusterePolicy a;
    if (auto it = fields.find("mode"); it != fields.end()) {
      if (it->second == "pure") {
        a.mode = TxnMode::Pure;
      } else if (it->second == "measured") {
        a.mode = TxnMode::Measured;
      } else {
        throw Error(ErrorCode::InvalidPolicy, "unknown austere mode '" + it->second + "'");
      }
      fields.erase(it);
    }
    a.deadline = take_ms("deadline");
    out = a;
  } else if (head == "spry") {
    SpryPolicy s;
    s.max_staleness = take_ms("staleness");
    s.latency_bound = take_ms("latency");
    out = s;
  } else {
    throw Error(ErrorCode::InvalidPolicy, "unknown policy '" + head + "'");
  }
  if (!fields.empty()) throw Error(ErrorCode::InvalidPolicy, "unexpected field '" + fields.begin()->first + "'");
  validate(out);
  return out;
}

enum class Access { Read, Write };

enum class SyncKind { ReadTxn, WriteTxn, Refresh };

struct ResumeNow {
  friend bool operator==(const ResumeNow&, const ResumeNow&) = default;
};
struct ResumeAfter {
  SyncKind sync;
  friend bool operator==(const ResumeAfter&, const ResumeAfter&) = default;
};
/// Refresh from the primary, but serve the local cache at `deadline` if the
/// fresh value has not arrived; with a staleness gate the cache is served
/// only when its age is within the gate.
struct ResumeAtDeadline {
  Millis deadline = 0;
  std::optional<Millis> staleness_gate;
  friend bool operator==(const ResumeAtDeadline&, const ResumeAtDeadline&) = default;
};
using ResumePlan = std::variant<ResumeNow, ResumeAfter, ResumeAtDeadline>;

struct AccessContext {
  bool at_primary = false;
  Millis age = 0;  // local replica age at decision time
};

inline ResumePlan decide_on_deref(const Policy& policy, const AccessContext& ctx, Millis now) {
  if (std::holds_alternative<LaspPolicy>(policy)) return ResumeNow{};
  if (std::holds_alternative<AusterePolicy>(policy)) return ResumeAfter{SyncKind::ReadTxn};
  const auto& s = std::get<SpryPolicy>(policy);
  // The primary is the refresh source; its copy is fresh by definition.
  if (ctx.at_primary) return ResumeNow{};
  if (s.latency_bound) return ResumeAtDeadline{now + *s.latency_bound, s.max_staleness};
  if (ctx.age <= *s.max_staleness) return ResumeNow{};
  return ResumeAfter{SyncKind::Refresh};
}

/// Writes under Spry behave as Lasp writes.
inline ResumePlan decide_on_store(const Policy& policy) {
  if (std::holds_alternative<AusterePolicy>(policy)) return ResumeAfter{SyncKind::WriteTxn};
  return ResumeNow{};
}

/// Per-register policy history; an access uses the policy in force at the
/// time it is made.
class PolicyTable {
 public:
  void declare(const RegisterId& reg, Policy policy) {
    validate(policy);
    history_[reg] = {{Millis{0}, std::move(policy)}};
  }

  void reconfigure(const RegisterId& reg, Policy policy, Millis at) {
    validate(policy);
    auto it = history_.find(reg);
    if (it == history_.end()) throw Error(ErrorCode::UnboundRegister, reg.name);
    auto& entries = it->second;
    auto pos = std::upper_bound(entries.begin(), entries.end(), at,
                                [](Millis t, const auto& e) { return t < e.first; });
    entries.insert(pos, {at, std::move(policy)});
  }

  const Policy& at(const RegisterId& reg, Millis t) const {
    auto it = history_.find(reg);
    if (it == history_.end()) throw Error(ErrorCode::UnboundRegister, reg.name);
    const Policy* current = &it->second.front().second;
    for (const auto& [from, p] : it->second) {
      if (from <= t) current = &p;
    }
    return *current;
  }

 private:
  std::map<RegisterId, std::vector<std::pair<Millis, Policy>>> history_;
};

}  // namespace capspace
