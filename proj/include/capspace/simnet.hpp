#pragma once

// Seeded single-threaded discrete-event simulator. It owns the clock, the
// PRNG, the event queue, and the network (links, partitions, crashed nodes).
// Nothing else in the runtime is allowed a source of time or randomness.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "capspace/common.hpp"

namespace capspace {

struct LatencyModel {
  Millis min = 0;
  Millis max = 0;

  static LatencyModel fixed(Millis ms) { return {ms, ms}; }
  static LatencyModel uniform(Millis lo, Millis hi) { return {lo, hi}; }
  bool is_fixed() const { return min == max; }

  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

struct LinkModel {
  LatencyModel latency = LatencyModel::fixed(1);
  double drop_prob = 0.0;

  void validate() const {
    if (latency.min < 0 || latency.min > latency.max) {
      throw Error(ErrorCode::ValidationError, "latency bounds must satisfy 0 <= min <= max");
    }
    if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) {
      throw Error(ErrorCode::ValidationError, "drop probability must be in [0,1]");
    }
  }

  friend bool operator==(const LinkModel&, const LinkModel&) = default;
};

struct PartitionConfig {
  std::vector<std::vector<NodeId>> groups;

  /// Canonical text, e.g. "0|1,2".
  std::string render() const {
    std::ostringstream out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g) out << '|';
      for (std::size_t i = 0; i < groups[g].size(); ++i) {
        if (i) out << ',';
        out << groups[g][i].value;
      }
    }
    return out.str();
  }
};

enum class EventKind { Deliver, Drop, Timer, Fault, Workload };

inline std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Deliver: return "deliver";
    case EventKind::Drop: return "drop";
    case EventKind::Timer: return "timer";
    case EventKind::Fault: return "fault";
    case EventKind::Workload: return "workload";
  }
  return "?";
}

struct ScheduledEvent {
  Millis time = 0;
  std::uint64_t seq = 0;

  friend bool operator==(const ScheduledEvent&, const ScheduledEvent&) = default;
};

class Simulator {
 public:
  using Action = std::function<void()>;

  Simulator(std::size_t node_count, LinkModel default_link, std::uint64_t seed)
      : default_link_(default_link), rng_(seed), up_(node_count, true), group_of_(node_count, 0) {
    default_link_.validate();
  }

  std::size_t node_count() const { return up_.size(); }
  Millis now() const { return now_; }
  std::size_t messages_sent() const { return messages_sent_; }
  const std::vector<std::string>& trace() const { return trace_; }

  /// Overrides the link model between a and b, in both directions.
  void set_link(NodeId a, NodeId b, LinkModel model) {
    check_node(a);
    check_node(b);
    model.validate();
    links_[ordered(a, b)] = model;
  }

  const LinkModel& link(NodeId a, NodeId b) const {
    auto it = links_.find(ordered(a, b));
    return it == links_.end() ? default_link_ : it->second;
  }

  /// Largest latency any message can take; used for retry intervals.
  Millis max_latency() const {
    Millis worst = default_link_.latency.max;
    for (const auto& [pair, model] : links_) worst = std::max(worst, model.latency.max);
    return worst;
  }

  bool is_up(NodeId node) const {
    check_node(node);
    return up_[node.value];
  }

  bool same_group(NodeId a, NodeId b) const {
    check_node(a);
    check_node(b);
    return group_of_[a.value] == group_of_[b.value];
  }

  /// Sends a message. Returns the delivery event, or nothing if the message
  /// is lost (partition, drop roll, or a crashed endpoint). `detail` is the
  /// canonical payload text used in the trace.
  std::optional<ScheduledEvent> send(NodeId from, NodeId to, const std::string& detail, Action on_deliver) {
    check_node(from);
    check_node(to);
    ++messages_sent_;
    std::ostringstream text;
    text << "from=" << from.value << " sent=" << now_ << ' ' << detail;
    // Losses are traced at send time so the trace accounts for every message.
    auto lost = [&](const char* why) -> std::optional<ScheduledEvent> {
      push(now_, EventKind::Drop, to, text.str() + " lost=" + why, nullptr);
      return std::nullopt;
    };
    if (!up_[from.value] || !up_[to.value]) return lost("down");
    if (!same_group(from, to)) return lost("partition");
    Millis delay = 0;
    if (from != to) {
      const LinkModel& model = link(from, to);
      if (model.drop_prob > 0.0 && unit_random() < model.drop_prob) return lost("roll");
      delay = model.latency.min;
      if (!model.latency.is_fixed()) {
        delay += static_cast<Millis>(uniform(static_cast<std::uint64_t>(model.latency.max - model.latency.min + 1)));
      }
    }
    return push(now_ + delay, EventKind::Deliver, to, text.str(), std::move(on_deliver));
  }

  ScheduledEvent schedule_timer(NodeId owner, const std::string& tag, Millis at, Action action) {
    check_node(owner);
    return push(std::max(at, now_), EventKind::Timer, owner, tag, std::move(action));
  }

  ScheduledEvent schedule_workload(NodeId node, const std::string& detail, Millis at, Action action) {
    check_node(node);
    return push(std::max(at, now_), EventKind::Workload, node, detail, std::move(action));
  }

  /// From `at` on, messages between different groups are not delivered.
  /// Messages already in flight are unaffected.
  void set_partition(const PartitionConfig& cfg, Millis at) {
    auto groups = validate_partition(cfg);
    push(std::max(at, now_), EventKind::Fault, NodeId{0}, "partition " + cfg.render(),
         [this, groups = std::move(groups)] { group_of_ = groups; });
  }

  void heal(Millis at) {
    push(std::max(at, now_), EventKind::Fault, NodeId{0}, "heal",
         [this] { std::fill(group_of_.begin(), group_of_.end(), 0); });
  }

  /// Crash-recover: a crashed node keeps its state but neither sends nor
  /// receives until it is brought back up.
  void set_node_status(NodeId node, bool up, Millis at) {
    check_node(node);
    push(std::max(at, now_), EventKind::Fault, node, up ? "recover" : "crash",
         [this, node, up] { up_[node.value] = up; });
  }

  /// Processes every event with time <= t in (time, seq) order.
  std::size_t run_until(Millis t) {
    std::size_t processed = 0;
    while (!queue_.empty() && queue_.front().time <= t) {
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      QueuedEvent ev = std::move(queue_.back());
      queue_.pop_back();
      now_ = ev.time;
      // A destination that crashed while the message was in flight loses it.
      if (ev.kind == EventKind::Deliver && !up_[ev.node.value]) {
        ev.kind = EventKind::Drop;
        ev.detail += " lost=down";
        ev.action = nullptr;
      }
      std::ostringstream line;
      line << "t=" << ev.time << " seq=" << ev.seq << " kind=" << event_kind_name(ev.kind)
           << " node=" << ev.node.value << " detail=" << ev.detail;
      trace_.push_back(line.str());
      ++processed;
      if (ev.action) ev.action();
    }
    now_ = std::max(now_, t);
    return processed;
  }

  bool idle() const { return queue_.empty(); }

  std::uint64_t next_random() { return rng_(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform(std::uint64_t n) { return n <= 1 ? 0 : rng_() % n; }

  double unit_random() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::string render_trace() const {
    std::string out;
    for (const auto& line : trace_) {
      out += line;
      out += '\n';
    }
    return out;
  }

 private:
  struct QueuedEvent {
    Millis time;
    std::uint64_t seq;
    EventKind kind;
    NodeId node;
    std::string detail;
    Action action;
  };

  struct Later {
    bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
      return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
    }
  };

  static std::pair<std::uint32_t, std::uint32_t> ordered(NodeId a, NodeId b) {
    return std::minmax(a.value, b.value);
  }

  void check_node(NodeId node) const {
    if (node.value >= up_.size()) throw Error(ErrorCode::InvalidNode, "node " + std::to_string(node.value));
  }

  std::vector<std::size_t> validate_partition(const PartitionConfig& cfg) const {
    std::vector<std::size_t> groups(up_.size(), SIZE_MAX);
    for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
      for (NodeId node : cfg.groups[g]) {
        check_node(node);
        if (groups[node.value] != SIZE_MAX) {
          throw Error(ErrorCode::OverlappingGroups, "node " + std::to_string(node.value) + " is in two groups");
        }
        groups[node.value] = g;
      }
    }
    for (std::size_t n = 0; n < groups.size(); ++n) {
      if (groups[n] == SIZE_MAX) {
        throw Error(ErrorCode::ValidationError, "partition does not cover node " + std::to_string(n));
      }
    }
    return groups;
  }

  ScheduledEvent push(Millis time, EventKind kind, NodeId node, std::string detail, Action action) {
    ScheduledEvent handle{time, next_seq_++};
    queue_.push_back(QueuedEvent{time, handle.seq, kind, node, std::move(detail), std::move(action)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
    return handle;
  }

  LinkModel default_link_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, LinkModel> links_;
  std::mt19937_64 rng_;
  std::vector<bool> up_;
  std::vector<std::size_t> group_of_;
  std::vector<QueuedEvent> queue_;
  std::vector<std::string> trace_;
  Millis now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::size_t messages_sent_ = 0;
};

}  // namespace capspace
