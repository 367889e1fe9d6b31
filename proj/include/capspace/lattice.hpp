#pragma once

// State-based CRDTs. Every kind is a bounded join-semilattice: merge is the
// least upper bound, leq the partial order, and update an inflation.

#include <algorithm>
#include <cctype>
#include <iterator>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>

#include "capspace/common.hpp"

namespace capspace {

using Element = std::int64_t;
using ElementSet = std::set<Element>;

enum class Kind { GCounter, PNCounter, GSet, TwoPSet, ORSet, LWWRegister };

inline constexpr Kind kAllKinds[] = {Kind::GCounter, Kind::PNCounter, Kind::GSet,
                                     Kind::TwoPSet,  Kind::ORSet,     Kind::LWWRegister};

inline std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::GCounter: return "gcounter";
    case Kind::PNCounter: return "pncounter";
    case Kind::GSet: return "gset";
    case Kind::TwoPSet: return "twopset";
    case Kind::ORSet: return "orset";
    case Kind::LWWRegister: return "lww";
  }
  return "?";
}

inline std::optional<Kind> kind_from_name(std::string_view name) {
  for (Kind k : kAllKinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

struct GCounter {
  // Entries are strictly positive; a missing actor means zero.
  std::map<ActorId, std::uint64_t> counts;

  friend bool operator==(const GCounter&, const GCounter&) = default;
};

struct PNCounter {
  GCounter increments;
  GCounter decrements;

  friend bool operator==(const PNCounter&, const PNCounter&) = default;
};

struct GSet {
  ElementSet elements;

  friend bool operator==(const GSet&, const GSet&) = default;
};

struct TwoPSet {
  ElementSet added;
  ElementSet removed;

  friend bool operator==(const TwoPSet&, const TwoPSet&) = default;
};

struct Tag {
  ActorId actor;
  std::uint64_t seq = 0;

  friend auto operator<=>(const Tag&, const Tag&) = default;
};

/// Observed-remove set with add-wins semantics. `adds` keeps every tag ever
/// seen for an element; an element is visible while one of its tags is not
/// in `removed`.
struct ORSet {
  std::map<Element, std::set<Tag>> adds;
  std::set<Tag> removed;

  friend bool operator==(const ORSet&, const ORSet&) = default;
};

struct LwwStamp {
  Millis timestamp = 0;
  ActorId actor;
  Element value = 0;

  // Element is the last tie-break so that the join stays total.
  friend auto operator<=>(const LwwStamp&, const LwwStamp&) = default;
};

struct LWWRegister {
  std::optional<LwwStamp> stamp;  // nullopt is bottom

  friend bool operator==(const LWWRegister&, const LWWRegister&) = default;
};

struct Increment {
  ActorId actor;
  friend bool operator==(const Increment&, const Increment&) = default;
};
struct Decrement {
  ActorId actor;
  friend bool operator==(const Decrement&, const Decrement&) = default;
};
struct Add {
  Element element = 0;
  ActorId actor;  // tag issuer, ORSet only
  friend bool operator==(const Add&, const Add&) = default;
};
struct Remove {
  Element element = 0;
  friend bool operator==(const Remove&, const Remove&) = default;
};
struct Assign {
  Element element = 0;
  Millis timestamp = 0;
  ActorId actor;
  friend bool operator==(const Assign&, const Assign&) = default;
};

using UpdateOp = std::variant<Increment, Decrement, Add, Remove, Assign>;

/// What a program sees: a number for counters, a set for sets, the current
/// element (or nothing, at bottom) for a register.
using Observable = std::variant<std::monostate, std::int64_t, ElementSet>;

class LatticeValue {
 public:
  using State = std::variant<GCounter, PNCounter, GSet, TwoPSet, ORSet, LWWRegister>;

  LatticeValue() = default;
  template <typename T>
    requires std::constructible_from<State, T>
  LatticeValue(T state) : state_(std::move(state)) {}  // NOLINT(google-explicit-constructor)

  static LatticeValue bottom(Kind kind) {
    switch (kind) {
      case Kind::GCounter: return GCounter{};
      case Kind::PNCounter: return PNCounter{};
      case Kind::GSet: return GSet{};
      case Kind::TwoPSet: return TwoPSet{};
      case Kind::ORSet: return ORSet{};
      case Kind::LWWRegister: return LWWRegister{};
    }
    throw Error(ErrorCode::InvalidKind, "unknown kind");
  }

  Kind kind() const { return static_cast<Kind>(state_.index()); }
  const State& state() const { return state_; }

  template <typename T>
  const T& as() const {
    return std::get<T>(state_);
  }

  friend bool operator==(const LatticeValue&, const LatticeValue&) = default;

 private:
  State state_;
};

namespace detail {

template <typename K, typename V>
std::map<K, V> pointwise_max(const std::map<K, V>& a, const std::map<K, V>& b) {
  std::map<K, V> out = a;
  for (const auto& [key, value] : b) {
    auto [it, inserted] = out.try_emplace(key, value);
    if (!inserted) it->second = std::max(it->second, value);
  }
  return out;
}

template <typename K, typename V>
bool pointwise_leq(const std::map<K, V>& a, const std::map<K, V>& b) {
  for (const auto& [key, value] : a) {
    auto it = b.find(key);
    if (it == b.end() || value > it->second) return false;
  }
  return true;
}

template <typename T>
std::set<T> set_union(const std::set<T>& a, const std::set<T>& b) {
  std::set<T> out = a;
  out.insert(b.begin(), b.end());
  return out;
}

template <typename T>
bool subset(const std::set<T>& a, const std::set<T>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::int64_t total(const GCounter& c) {
  std::uint64_t sum = 0;
  for (const auto& [actor, n] : c.counts) sum += n;
  return static_cast<std::int64_t>(sum);
}

inline GCounter join(const GCounter& a, const GCounter& b) { return {pointwise_max(a.counts, b.counts)}; }
inline bool below(const GCounter& a, const GCounter& b) { return pointwise_leq(a.counts, b.counts); }

inline PNCounter join(const PNCounter& a, const PNCounter& b) {
  return {join(a.increments, b.increments), join(a.decrements, b.decrements)};
}
inline bool below(const PNCounter& a, const PNCounter& b) {
  return below(a.increments, b.increments) && below(a.decrements, b.decrements);
}

inline GSet join(const GSet& a, const GSet& b) { return {set_union(a.elements, b.elements)}; }
inline bool below(const GSet& a, const GSet& b) { return subset(a.elements, b.elements); }

inline TwoPSet join(const TwoPSet& a, const TwoPSet& b) {
  return {set_union(a.added, b.added), set_union(a.removed, b.removed)};
}
inline bool below(const TwoPSet& a, const TwoPSet& b) {
  return subset(a.added, b.added) && subset(a.removed, b.removed);
}

inline ORSet join(const ORSet& a, const ORSet& b) {
  ORSet out = a;
  for (const auto& [element, tags] : b.adds) out.adds[element].insert(tags.begin(), tags.end());
  out.removed.insert(b.removed.begin(), b.removed.end());
  return out;
}
inline bool below(const ORSet& a, const ORSet& b) {
  for (const auto& [element, tags] : a.adds) {
    auto it = b.adds.find(element);
    if (it == b.adds.end() || !subset(tags, it->second)) return false;
  }
  return subset(a.removed, b.removed);
}

inline LWWRegister join(const LWWRegister& a, const LWWRegister& b) {
  if (!a.stamp) return b;
  if (!b.stamp) return a;
  return *a.stamp < *b.stamp ? b : a;
}
inline bool below(const LWWRegister& a, const LWWRegister& b) {
  if (!a.stamp) return true;
  if (!b.stamp) return false;
  return *a.stamp <= *b.stamp;
}

inline std::set<Tag> live_tags(const ORSet& s, Element element) {
  std::set<Tag> live;
  auto it = s.adds.find(element);
  if (it == s.adds.end()) return live;
  for (const Tag& tag : it->second) {
    if (!s.removed.contains(tag)) live.insert(tag);
  }
  return live;
}

inline std::uint64_t next_seq(const ORSet& s, ActorId actor) {
  std::uint64_t seq = 0;
  for (const auto& [element, tags] : s.adds) {
    for (const Tag& tag : tags) {
      if (tag.actor == actor) seq = std::max(seq, tag.seq);
    }
  }
  return seq + 1;
}

[[noreturn]] inline void invalid_op(Kind kind, std::string_view op) {
  throw Error(ErrorCode::InvalidOp, std::string(op) + " is not valid on " + std::string(kind_name(kind)));
}

}  // namespace detail

/// Least upper bound of two values of the same kind.
inline LatticeValue merge(const LatticeValue& a, const LatticeValue& b) {
  if (a.kind() != b.kind()) {
    throw Error(ErrorCode::KindMismatch,
                std::string(kind_name(a.kind())) + " vs " + std::string(kind_name(b.kind())));
  }
  return std::visit(
      [&](const auto& lhs) -> LatticeValue {
        using T = std::decay_t<decltype(lhs)>;
        return detail::join(lhs, b.as<T>());
      },
      a.state());
}

inline bool leq(const LatticeValue& a, const LatticeValue& b) {
  if (a.kind() != b.kind()) {
    throw Error(ErrorCode::KindMismatch,
                std::string(kind_name(a.kind())) + " vs " + std::string(kind_name(b.kind())));
  }
  return std::visit(
      [&](const auto& lhs) {
        using T = std::decay_t<decltype(lhs)>;
        return detail::below(lhs, b.as<T>());
      },
      a.state());
}

inline bool valid_for(Kind kind, const UpdateOp& op) {
  switch (kind) {
    case Kind::GCounter: return std::holds_alternative<Increment>(op);
    case Kind::PNCounter: return std::holds_alternative<Increment>(op) || std::holds_alternative<Decrement>(op);
    case Kind::GSet: return std::holds_alternative<Add>(op);
    case Kind::TwoPSet:
    case Kind::ORSet: return std::holds_alternative<Add>(op) || std::holds_alternative<Remove>(op);
    case Kind::LWWRegister: return std::holds_alternative<Assign>(op);
  }
  return false;
}

inline std::string_view op_name(const UpdateOp& op) {
  static constexpr std::string_view names[] = {"increment", "decrement", "add", "remove", "assign"};
  return names[op.index()];
}

/// Applies an update at one replica. The result is always an inflation of `v`.
inline LatticeValue update(const LatticeValue& v, const UpdateOp& op) {
  if (!valid_for(v.kind(), op)) detail::invalid_op(v.kind(), op_name(op));
  switch (v.kind()) {
    case Kind::GCounter: {
      GCounter out = v.as<GCounter>();
      ++out.counts[std::get<Increment>(op).actor];
      return out;
    }
    case Kind::PNCounter: {
      PNCounter out = v.as<PNCounter>();
      if (const auto* inc = std::get_if<Increment>(&op)) {
        ++out.increments.counts[inc->actor];
      } else {
        ++out.decrements.counts[std::get<Decrement>(op).actor];
      }
      return out;
    }
    case Kind::GSet: {
      GSet out = v.as<GSet>();
      out.elements.insert(std::get<Add>(op).element);
      return out;
    }
    case Kind::TwoPSet: {
      TwoPSet out = v.as<TwoPSet>();
      if (const auto* add = std::get_if<Add>(&op)) {
        out.added.insert(add->element);
      } else {
        out.removed.insert(std::get<Remove>(op).element);
      }
      return out;
    }
    case Kind::ORSet: {
      ORSet out = v.as<ORSet>();
      if (const auto* add = std::get_if<Add>(&op)) {
        out.adds[add->element].insert(Tag{add->actor, detail::next_seq(out, add->actor)});
      } else {
        auto live = detail::live_tags(out, std::get<Remove>(op).element);
        out.removed.insert(live.begin(), live.end());
      }
      return out;
    }
    case Kind::LWWRegister: {
      const auto& assign = std::get<Assign>(op);
      return detail::join(v.as<LWWRegister>(), LWWRegister{LwwStamp{assign.timestamp, assign.actor, assign.element}});
    }
  }
  detail::invalid_op(v.kind(), op_name(op));
}

inline Observable query(const LatticeValue& v) {
  switch (v.kind()) {
    case Kind::GCounter: return detail::total(v.as<GCounter>());
    case Kind::PNCounter: {
      const auto& c = v.as<PNCounter>();
      return detail::total(c.increments) - detail::total(c.decrements);
    }
    case Kind::GSet: return v.as<GSet>().elements;
    case Kind::TwoPSet: {
      const auto& s = v.as<TwoPSet>();
      ElementSet visible;
      std::set_difference(s.added.begin(), s.added.end(), s.removed.begin(), s.removed.end(),
                          std::inserter(visible, visible.end()));
      return visible;
    }
    case Kind::ORSet: {
      const auto& s = v.as<ORSet>();
      ElementSet visible;
      for (const auto& [element, tags] : s.adds) {
        if (!detail::live_tags(s, element).empty()) visible.insert(element);
      }
      return visible;
    }
    case Kind::LWWRegister: {
      const auto& r = v.as<LWWRegister>();
      if (!r.stamp) return std::monostate{};
      return r.stamp->value;
    }
  }
  return std::monostate{};
}

inline bool is_set_kind(Kind kind) {
  return kind == Kind::GSet || kind == Kind::TwoPSet || kind == Kind::ORSet;
}

/// Elementwise image of a set CRDT. The output is a deterministic function of
/// the input state; for ORSet it also commutes with merge.
template <std::invocable<Element> F>
LatticeValue map_set(const LatticeValue& v, F&& f) {
  switch (v.kind()) {
    case Kind::GSet: {
      GSet out;
      for (Element e : v.as<GSet>().elements) out.elements.insert(f(e));
      return out;
    }
    case Kind::TwoPSet: {
      // Remove an image only when none of its preimages is still visible,
      // otherwise a non-injective f would hide visible elements.
      const auto& s = v.as<TwoPSet>();
      const auto visible = std::get<ElementSet>(query(v));
      ElementSet visible_image;
      for (Element e : visible) visible_image.insert(f(e));
      TwoPSet out;
      for (Element e : s.added) out.added.insert(f(e));
      for (Element e : s.removed) {
        Element image = f(e);
        if (!visible_image.contains(image)) out.removed.insert(image);
      }
      return out;
    }
    case Kind::ORSet: {
      const auto& s = v.as<ORSet>();
      ORSet out;
      for (const auto& [element, tags] : s.adds) out.adds[f(element)].insert(tags.begin(), tags.end());
      out.removed = s.removed;
      return out;
    }
    default:
      throw Error(ErrorCode::InvalidKind, "map_set on " + std::string(kind_name(v.kind())));
  }
}

template <std::predicate<Element> P>
LatticeValue filter_set(const LatticeValue& v, P&& keep) {
  switch (v.kind()) {
    case Kind::GSet: {
      GSet out;
      for (Element e : v.as<GSet>().elements) {
        if (keep(e)) out.elements.insert(e);
      }
      return out;
    }
    case Kind::TwoPSet: {
      const auto& s = v.as<TwoPSet>();
      TwoPSet out;
      for (Element e : s.added) {
        if (keep(e)) out.added.insert(e);
      }
      for (Element e : s.removed) {
        if (keep(e)) out.removed.insert(e);
      }
      return out;
    }
    case Kind::ORSet: {
      const auto& s = v.as<ORSet>();
      ORSet out;
      for (const auto& [element, tags] : s.adds) {
        if (!keep(element)) continue;
        out.adds[element] = tags;
        for (const Tag& tag : tags) {
          if (s.removed.contains(tag)) out.removed.insert(tag);
        }
      }
      return out;
    }
    default:
      throw Error(ErrorCode::InvalidKind, "filter_set on " + std::string(kind_name(v.kind())));
  }
}

// ---------------------------------------------------------------------------
// Canonical text. Keys, elements, and tags are printed in sorted order so the
// rendering is injective per kind and stable across runs.

namespace detail {

inline void render_counts(std::ostream& out, const GCounter& c) {
  out << '{';
  bool first = true;
  for (const auto& [actor, n] : c.counts) {
    if (!first) out << ',';
    first = false;
    out << actor.value << ':' << n;
  }
  out << '}';
}

inline void render_elements(std::ostream& out, const ElementSet& s) {
  out << '{';
  bool first = true;
  for (Element e : s) {
    if (!first) out << ',';
    first = false;
    out << e;
  }
  out << '}';
}

inline void render_tags(std::ostream& out, const std::set<Tag>& tags) {
  out << '[';
  bool first = true;
  for (const Tag& t : tags) {
    if (!first) out << ',';
    first = false;
    out << t.actor.value << '.' << t.seq;
  }
  out << ']';
}

}  // namespace detail

inline std::string render(const LatticeValue& v) {
  std::ostringstream out;
  out << kind_name(v.kind());
  switch (v.kind()) {
    case Kind::GCounter: detail::render_counts(out, v.as<GCounter>()); break;
    case Kind::PNCounter: {
      const auto& c = v.as<PNCounter>();
      out << "{p=";
      detail::render_counts(out, c.increments);
      out << ",n=";
      detail::render_counts(out, c.decrements);
      out << '}';
      break;
    }
    case Kind::GSet: detail::render_elements(out, v.as<GSet>().elements); break;
    case Kind::TwoPSet: {
      const auto& s = v.as<TwoPSet>();
      out << "{add=";
      detail::render_elements(out, s.added);
      out << ",rem=";
      detail::render_elements(out, s.removed);
      out << '}';
      break;
    }
    case Kind::ORSet: {
      const auto& s = v.as<ORSet>();
      out << "{add={";
      bool first = true;
      for (const auto& [element, tags] : s.adds) {
        if (!first) out << ',';
        first = false;
        out << element << ':';
        detail::render_tags(out, tags);
      }
      out << "},rem=";
      detail::render_tags(out, s.removed);
      out << '}';
      break;
    }
    case Kind::LWWRegister: {
      const auto& r = v.as<LWWRegister>();
      out << '{';
      if (r.stamp) out << "ts=" << r.stamp->timestamp << ",actor=" << r.stamp->actor.value << ",value=" << r.stamp->value;
      out << '}';
      break;
    }
  }
  return out.str();
}

inline std::string render(const Observable& o) {
  std::ostringstream out;
  if (std::holds_alternative<std::monostate>(o)) {
    out << "nil";
  } else if (const auto* n = std::get_if<std::int64_t>(&o)) {
    out << *n;
  } else {
    detail::render_elements(out, std::get<ElementSet>(o));
  }
  return out.str();
}

inline std::string render(const UpdateOp& op) {
  std::ostringstream out;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Increment>) {
          out << "increment(" << o.actor.value << ')';
        } else if constexpr (std::is_same_v<T, Decrement>) {
          out << "decrement(" << o.actor.value << ')';
        } else if constexpr (std::is_same_v<T, Add>) {
          out << "add(" << o.element << ',' << o.actor.value << ')';
        } else if constexpr (std::is_same_v<T, Remove>) {
          out << "remove(" << o.element << ')';
        } else {
          out << "assign(" << o.element << ',' << o.timestamp << ',' << o.actor.value << ')';
        }
      },
      op);
  return out.str();
}

namespace detail {

/// Recursive-descent reader for the canonical renderings above.
class CanonicalReader {
 public:
  explicit CanonicalReader(std::string_view text) : text_(text) {}

  void expect(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) fail("expected '" + std::string(token) + "'");
    pos_ += token.size();
  }

  bool accept(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) return false;
    pos_ += token.size();
    return true;
  }

  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }

  std::string word() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::int64_t integer() {
    std::size_t start = pos_;
    if (peek('-')) ++pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_ || (pos_ == start + 1 && text_[start] == '-')) fail("expected integer");
    return std::stoll(std::string(text_.substr(start, pos_ - start)));
  }

  void finish() const {
    if (pos_ != text_.size()) fail("trailing characters");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::ParseError, why + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  template <typename Fn>
  void list(char close, Fn&& item) {
    if (accept(std::string_view(&close, 1))) return;
    do {
      item();
    } while (accept(","));
    expect(std::string_view(&close, 1));
  }

  GCounter counts() {
    GCounter c;
    expect("{");
    list('}', [&] {
      auto actor = static_cast<std::uint32_t>(integer());
      expect(":");
      auto n = integer();
      if (n <= 0) fail("counter entries must be positive");
      c.counts[ActorId{actor}] = static_cast<std::uint64_t>(n);
    });
    return c;
  }

  ElementSet elements() {
    ElementSet s;
    expect("{");
    list('}', [&] { s.insert(integer()); });
    return s;
  }

  std::set<Tag> tags() {
    std::set<Tag> out;
    expect("[");
    list(']', [&] {
      auto actor = static_cast<std::uint32_t>(integer());
      expect(".");
      auto seq = integer();
      out.insert(Tag{ActorId{actor}, static_cast<std::uint64_t>(seq)});
    });
    return out;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Inverse of render(const LatticeValue&).
inline LatticeValue parse_lattice(std::string_view text) {
  detail::CanonicalReader in(text);
  auto name = in.word();
  auto kind = kind_from_name(name);
  if (!kind) in.fail("unknown kind '" + name + "'");
  LatticeValue out;
  switch (*kind) {
    case Kind::GCounter: out = in.counts(); break;
    case Kind::PNCounter: {
      PNCounter c;
      in.expect("{p=");
      c.increments = in.counts();
      in.expect(",n=");
      c.decrements = in.counts();
      in.expect("}");
      out = c;
      break;
    }
    case Kind::GSet: out = GSet{in.elements()}; break;
    case Kind::TwoPSet: {
      TwoPSet s;
      in.expect("{add=");
      s.added = in.elements();
      in.expect(",rem=");
      s.removed = in.elements();
      in.expect("}");
      out = s;
      break;
    }
    case Kind::ORSet: {
      ORSet s;
      in.expect("{add={");
      in.list('}', [&] {
        Element e = in.integer();
        in.expect(":");
        s.adds[e] = in.tags();
      });
      in.expect(",rem=");
      s.removed = in.tags();
      in.expect("}");
      out = s;
      break;
    }
    case Kind::LWWRegister: {
      LWWRegister r;
      in.expect("{");
      if (!in.accept("}")) {
        LwwStamp stamp;
        in.expect("ts=");
        stamp.timestamp = in.integer();
        in.expect(",actor=");
        stamp.actor = ActorId{static_cast<std::uint32_t>(in.integer())};
        in.expect(",value=");
        stamp.value = in.integer();
        in.expect("}");
        r.stamp = stamp;
      }
      out = r;
      break;
    }
  }
  in.finish();
  return out;
}

/// Inverse of render(const UpdateOp&).
inline UpdateOp parse_update_op(std::string_view text) {
  detail::CanonicalReader in(text);
  auto name = in.word();
  in.expect("(");
  UpdateOp op;
  auto actor = [&] { return ActorId{static_cast<std::uint32_t>(in.integer())}; };
  if (name == "increment") {
    op = Increment{actor()};
  } else if (name == "decrement") {
    op = Decrement{actor()};
  } else if (name == "add") {
    Element e = in.integer();
    in.expect(",");
    op = Add{e, actor()};
  } else if (name == "remove") {
    op = Remove{in.integer()};
  } else if (name == "assign") {
    Element e = in.integer();
    in.expect(",");
    Millis ts = in.integer();
    in.expect(",");
    op = Assign{e, ts, actor()};
  } else {
    in.fail("unknown update '" + name + "'");
  }
  in.expect(")");
  in.finish();
  return op;
}

/// Inverse of render(const Observable&).
inline Observable parse_observable(std::string_view text) {
  if (text == "nil") return std::monostate{};
  detail::CanonicalReader in(text);
  if (in.peek('{')) {
    auto s = in.elements();
    in.finish();
    return s;
  }
  auto n = in.integer();
  in.finish();
  return n;
}

}  // namespace capspace
