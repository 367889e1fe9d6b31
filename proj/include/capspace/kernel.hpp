#pragma once

// Call-by-value lambda calculus with register dereference and store forms.
//
// The evaluator is an explicit-stack machine, so an evaluation that reaches a
// Deref or Store simply stops with a pending AccessRequest and can be resumed
// later with the value the access produced. The runtime uses this as the
// interposition point where a policy inserts synchronization.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "capspace/common.hpp"
#include "capspace/lattice.hpp"
#include "capspace/policy.hpp"

namespace capspace {

using Constant = std::variant<std::monostate, std::int64_t, bool, ElementSet>;

enum class PrimOp {
  Add, Sub, Mul, Div, Mod,
  Eq, Lt, Le, Gt, Ge,
  And, Or, Not, If,
  SetOf, Union, Inter, Diff, Member, Size, Sum,
  Do,
};

enum class StoreVerb { Inc, Dec, Add, Remove, Assign };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Var { std::string name; };
struct Lam { std::string param; ExprPtr body; };
struct App { ExprPtr fn; ExprPtr arg; };
struct Lit { Constant value; };
struct Prim { PrimOp op; std::vector<ExprPtr> args; };
struct Deref { RegisterId reg; };
struct Store {
  RegisterId reg;
  StoreVerb verb;
  ExprPtr arg;  // null for inc/dec
};

struct Expr {
  std::variant<Var, Lam, App, Lit, Prim, Deref, Store> node;
};

template <typename T>
ExprPtr make_expr(T node) {
  return std::make_shared<const Expr>(Expr{std::move(node)});
}

namespace dsl {
inline ExprPtr var(std::string name) { return make_expr(Var{std::move(name)}); }
inline ExprPtr lam(std::string param, ExprPtr body) { return make_expr(Lam{std::move(param), std::move(body)}); }
inline ExprPtr app(ExprPtr fn, ExprPtr arg) { return make_expr(App{std::move(fn), std::move(arg)}); }
inline ExprPtr lit(std::int64_t v) { return make_expr(Lit{v}); }
inline ExprPtr lit(bool v) { return make_expr(Lit{v}); }
inline ExprPtr prim(PrimOp op, std::vector<ExprPtr> args) { return make_expr(Prim{op, std::move(args)}); }
inline ExprPtr deref(std::string reg) { return make_expr(Deref{RegisterId{std::move(reg)}}); }
inline ExprPtr store(std::string reg, StoreVerb verb, ExprPtr arg = nullptr) {
  return make_expr(Store{RegisterId{std::move(reg)}, verb, std::move(arg)});
}
}  // namespace dsl

// ---------------------------------------------------------------------------
// Values and environments

struct Closure;
using ClosurePtr = std::shared_ptr<const Closure>;
using Value = std::variant<std::monostate, std::int64_t, bool, ElementSet, ClosurePtr>;

struct Binding;
using Env = std::shared_ptr<const Binding>;

struct Binding {
  std::string name;
  Value value;
  Env next;
};

struct Closure {
  std::string param;
  ExprPtr body;
  Env env;
};

inline Value from_constant(const Constant& c) {
  return std::visit([](const auto& v) -> Value { return v; }, c);
}

inline Value from_observable(const Observable& o) {
  return std::visit([](const auto& v) -> Value { return v; }, o);
}

inline std::string render(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return "nil";
  if (const auto* n = std::get_if<std::int64_t>(&v)) return std::to_string(*n);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (const auto* s = std::get_if<ElementSet>(&v)) return render(Observable{*s});
  return "<closure " + std::get<ClosurePtr>(v)->param + ">";
}

// ---------------------------------------------------------------------------
// Static checks

namespace detail {

inline void collect_free(const ExprPtr& e, std::vector<std::string>& bound, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Var>) {
          if (std::find(bound.begin(), bound.end(), n.name) == bound.end()) out.insert(n.name);
        } else if constexpr (std::is_same_v<T, Lam>) {
          bound.push_back(n.param);
          collect_free(n.body, bound, out);
          bound.pop_back();
        } else if constexpr (std::is_same_v<T, App>) {
          collect_free(n.fn, bound, out);
          collect_free(n.arg, bound, out);
        } else if constexpr (std::is_same_v<T, Prim>) {
          for (const auto& a : n.args) collect_free(a, bound, out);
        } else if constexpr (std::is_same_v<T, Store>) {
          if (n.arg) collect_free(n.arg, bound, out);
        }
      },
      e->node);
}

inline void collect_registers(const ExprPtr& e, std::set<RegisterId>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lam>) {
          collect_registers(n.body, out);
        } else if constexpr (std::is_same_v<T, App>) {
          collect_registers(n.fn, out);
          collect_registers(n.arg, out);
        } else if constexpr (std::is_same_v<T, Prim>) {
          for (const auto& a : n.args) collect_registers(a, out);
        } else if constexpr (std::is_same_v<T, Deref>) {
          out.insert(n.reg);
        } else if constexpr (std::is_same_v<T, Store>) {
          out.insert(n.reg);
          if (n.arg) collect_registers(n.arg, out);
        }
      },
      e->node);
}

}  // namespace detail

inline std::set<std::string> free_variables(const ExprPtr& e) {
  std::vector<std::string> bound;
  std::set<std::string> out;
  detail::collect_free(e, bound, out);
  return out;
}

inline std::set<RegisterId> registers_used(const ExprPtr& e) {
  std::set<RegisterId> out;
  detail::collect_registers(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Surface syntax

inline constexpr std::pair<std::string_view, PrimOp> kPrimNames[] = {
    {"+", PrimOp::Add},      {"-", PrimOp::Sub},       {"*", PrimOp::Mul},       {"/", PrimOp::Div},
    {"mod", PrimOp::Mod},    {"=", PrimOp::Eq},        {"<", PrimOp::Lt},        {"<=", PrimOp::Le},
    {">", PrimOp::Gt},       {">=", PrimOp::Ge},       {"and", PrimOp::And},     {"or", PrimOp::Or},
    {"not", PrimOp::Not},    {"if", PrimOp::If},       {"set", PrimOp::SetOf},   {"union", PrimOp::Union},
    {"inter", PrimOp::Inter}, {"diff", PrimOp::Diff},  {"member", PrimOp::Member}, {"size", PrimOp::Size},
    {"sum", PrimOp::Sum},    {"do", PrimOp::Do},
};

inline std::string_view prim_name(PrimOp op) {
  for (const auto& [name, p] : kPrimNames) {
    if (p == op) return name;
  }
  return "?";
}

inline constexpr std::pair<std::string_view, StoreVerb> kStoreVerbs[] = {
    {"inc", StoreVerb::Inc}, {"dec", StoreVerb::Dec},       {"add", StoreVerb::Add},
    {"remove", StoreVerb::Remove}, {"assign", StoreVerb::Assign},
};

inline std::string_view verb_name(StoreVerb v) {
  for (const auto& [name, verb] : kStoreVerbs) {
    if (verb == v) return name;
  }
  return "?";
}

inline std::string render(const ExprPtr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Var>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, Lam>) {
          return "(lam " + n.param + " " + render(n.body) + ")";
        } else if constexpr (std::is_same_v<T, App>) {
          return "(app " + render(n.fn) + " " + render(n.arg) + ")";
        } else if constexpr (std::is_same_v<T, Lit>) {
          if (const auto* s = std::get_if<ElementSet>(&n.value)) {
            std::string out = "(set";
            for (Element x : *s) out += " " + std::to_string(x);
            return out + ")";
          }
          return render(from_constant(n.value));
        } else if constexpr (std::is_same_v<T, Prim>) {
          std::string out = "(" + std::string(prim_name(n.op));
          for (const auto& a : n.args) out += " " + render(a);
          return out + ")";
        } else if constexpr (std::is_same_v<T, Deref>) {
          return "(deref " + n.reg.name + ")";
        } else {
          std::string out = "(store " + n.reg.name + " (" + std::string(verb_name(n.verb));
          if (n.arg) out += " " + render(n.arg);
          return out + "))";
        }
      },
      e->node);
}

namespace detail {

/// S-expression reader producing Expr trees.
class ExprReader {
 public:
  explicit ExprReader(std::string_view text) : text_(text) {}

  ExprPtr program() {
    ExprPtr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::ParseError, why + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at(char c) {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!at(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string atom() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    if (start == pos_) fail("expected an atom");
    return std::string(text_.substr(start, pos_ - start));
  }

  static bool is_integer(const std::string& s) {
    std::size_t i = (s[0] == '-' && s.size() > 1) ? 1 : 0;
    return i < s.size() && std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                                       [](unsigned char c) { return std::isdigit(c); });
  }

  std::string name() {
    std::string s = atom();
    if (is_integer(s)) fail("expected a name, got '" + s + "'");
    return s;
  }

  ExprPtr expr() {
    if (!at('(')) {
      std::string s = atom();
      if (is_integer(s)) {
        try {
          return make_expr(Lit{std::stoll(s)});
        } catch (const std::out_of_range&) {
          fail("integer out of range");
        }
      }
      if (s == "true") return make_expr(Lit{true});
      if (s == "false") return make_expr(Lit{false});
      if (s == "nil") return make_expr(Lit{std::monostate{}});
      return make_expr(Var{s});
    }
    expect('(');
    if (++depth_ > kMaxDepth) fail("nesting deeper than " + std::to_string(kMaxDepth));
    std::string head = atom();
    ExprPtr out;
    if (head == "lam") {
      std::string param = name();
      out = make_expr(Lam{param, expr()});
    } else if (head == "app") {
      out = expr();
      out = make_expr(App{out, expr()});
      while (!at(')')) out = make_expr(App{out, expr()});
    } else if (head == "let") {
      std::string param = name();
      ExprPtr bound = expr();
      ExprPtr body = expr();
      out = make_expr(App{make_expr(Lam{param, body}), bound});
    } else if (head == "deref") {
      out = make_expr(Deref{RegisterId{name()}});
    } else if (head == "store") {
      RegisterId reg{name()};
      expect('(');
      std::string verb = atom();
      auto it = std::find_if(std::begin(kStoreVerbs), std::end(kStoreVerbs),
                             [&](const auto& p) { return p.first == verb; });
      if (it == std::end(kStoreVerbs)) fail("unknown update '" + verb + "'");
      ExprPtr arg;
      bool wants_arg = it->second != StoreVerb::Inc && it->second != StoreVerb::Dec;
      if (wants_arg) arg = expr();
      expect(')');
      out = make_expr(Store{reg, it->second, arg});
    } else {
      auto it = std::find_if(std::begin(kPrimNames), std::end(kPrimNames),
                             [&](const auto& p) { return p.first == head; });
      if (it == std::end(kPrimNames)) fail("unknown form '" + head + "'");
      std::vector<ExprPtr> args;
      while (!at(')')) args.push_back(expr());
      out = make_expr(Prim{it->second, std::move(args)});
    }
    expect(')');
    --depth_;
    return out;
  }

  // Bounds the recursion of this reader and of the static checks.
  static constexpr std::size_t kMaxDepth = 4096;

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
};

}  // namespace detail

inline ExprPtr parse_expr(std::string_view text) { return detail::ExprReader(text).program(); }

// ---------------------------------------------------------------------------
// Primitive operations

namespace detail {

[[noreturn]] inline void type_error(PrimOp op, const std::string& why) {
  throw Error(ErrorCode::TypeError, std::string(prim_name(op)) + ": " + why);
}

inline std::int64_t as_int(PrimOp op, const Value& v) {
  if (const auto* n = std::get_if<std::int64_t>(&v)) return *n;
  type_error(op, "expected integer, got " + render(v));
}

inline bool as_bool(PrimOp op, const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  type_error(op, "expected boolean, got " + render(v));
}

inline const ElementSet& as_set(PrimOp op, const Value& v) {
  if (const auto* s = std::get_if<ElementSet>(&v)) return *s;
  type_error(op, "expected set, got " + render(v));
}

inline void arity(PrimOp op, const std::vector<Value>& args, std::size_t lo, std::size_t hi) {
  if (args.size() < lo || args.size() > hi) type_error(op, "wrong number of arguments");
}

inline Value apply_prim(PrimOp op, const std::vector<Value>& args) {
  constexpr auto many = static_cast<std::size_t>(-1);
  switch (op) {
    case PrimOp::Add:
    case PrimOp::Mul: {
      arity(op, args, 1, many);
      std::int64_t acc = op == PrimOp::Add ? 0 : 1;
      for (const auto& a : args) acc = op == PrimOp::Add ? acc + as_int(op, a) : acc * as_int(op, a);
      return acc;
    }
    case PrimOp::Sub:
      arity(op, args, 1, 2);
      if (args.size() == 1) return -as_int(op, args[0]);
      return as_int(op, args[0]) - as_int(op, args[1]);
    case PrimOp::Div:
    case PrimOp::Mod: {
      arity(op, args, 2, 2);
      auto d = as_int(op, args[1]);
      if (d == 0) type_error(op, "division by zero");
      auto n = as_int(op, args[0]);
      return op == PrimOp::Div ? n / d : n % d;
    }
    case PrimOp::Eq:
      arity(op, args, 2, 2);
      if (std::holds_alternative<ClosurePtr>(args[0]) || std::holds_alternative<ClosurePtr>(args[1])) {
        type_error(op, "closures are not comparable");
      }
      return args[0] == args[1];
    case PrimOp::Lt: arity(op, args, 2, 2); return as_int(op, args[0]) < as_int(op, args[1]);
    case PrimOp::Le: arity(op, args, 2, 2); return as_int(op, args[0]) <= as_int(op, args[1]);
    case PrimOp::Gt: arity(op, args, 2, 2); return as_int(op, args[0]) > as_int(op, args[1]);
    case PrimOp::Ge: arity(op, args, 2, 2); return as_int(op, args[0]) >= as_int(op, args[1]);
    case PrimOp::And:
    case PrimOp::Or: {
      arity(op, args, 1, many);
      bool acc = op == PrimOp::And;
      for (const auto& a : args) acc = op == PrimOp::And ? (acc && as_bool(op, a)) : (acc || as_bool(op, a));
      return acc;
    }
    case PrimOp::Not: arity(op, args, 1, 1); return !as_bool(op, args[0]);
    case PrimOp::If: arity(op, args, 3, 3); return as_bool(op, args[0]) ? args[1] : args[2];
    case PrimOp::SetOf: {
      ElementSet s;
      for (const auto& a : args) s.insert(as_int(op, a));
      return s;
    }
    case PrimOp::Union:
    case PrimOp::Inter:
    case PrimOp::Diff: {
      arity(op, args, 2, 2);
      const auto& a = as_set(op, args[0]);
      const auto& b = as_set(op, args[1]);
      ElementSet out;
      if (op == PrimOp::Union) {
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
      } else if (op == PrimOp::Inter) {
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
      } else {
        std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
      }
      return out;
    }
    case PrimOp::Member: arity(op, args, 2, 2); return as_set(op, args[1]).contains(as_int(op, args[0]));
    case PrimOp::Size: arity(op, args, 1, 1); return static_cast<std::int64_t>(as_set(op, args[0]).size());
    case PrimOp::Sum: {
      arity(op, args, 1, 1);
      std::int64_t acc = 0;
      for (Element x : as_set(op, args[0])) acc += x;
      return acc;
    }
    case PrimOp::Do: arity(op, args, 1, many); return args.back();
  }
  type_error(op, "unknown primitive");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The machine

/// A register access the machine is waiting on. For stores, `element` holds
/// the evaluated argument (add/remove/assign).
struct AccessRequest {
  Access access = Access::Read;
  RegisterId reg;
  StoreVerb verb = StoreVerb::Inc;
  std::optional<Element> element;
};

/// Binds a store request to a concrete update issued by `actor` at `now`.
inline UpdateOp bind_update(const AccessRequest& req, ActorId actor, Millis now) {
  switch (req.verb) {
    case StoreVerb::Inc: return Increment{actor};
    case StoreVerb::Dec: return Decrement{actor};
    case StoreVerb::Add: return Add{*req.element, actor};
    case StoreVerb::Remove: return Remove{*req.element};
    case StoreVerb::Assign: return Assign{*req.element, now, actor};
  }
  throw Error(ErrorCode::InvalidOp, "unknown store verb");
}

class Machine {
 public:
  enum class Status { Running, Suspended, Done, Failed };

  static constexpr std::size_t kDefaultStepLimit = 1'000'000;

  explicit Machine(ExprPtr program, std::size_t step_limit = kDefaultStepLimit)
      : control_(EvalState{std::move(program), nullptr}), step_limit_(step_limit) {}

  /// Runs until the program finishes, fails, or reaches a register access.
  Status run() {
    if (status_ != Status::Running) return status_;
    try {
      loop();
    } catch (const Error& e) {
      status_ = Status::Failed;
      error_code_ = e.code();
      error_message_ = e.what();
      failure_ = std::current_exception();
    }
    return status_;
  }

  /// Continues a suspended evaluation with the value of the pending access.
  void resume(Value v) {
    if (status_ != Status::Suspended) throw Error(ErrorCode::InvalidOp, "machine is not suspended");
    control_ = std::move(v);
    status_ = Status::Running;
  }

  Status status() const { return status_; }
  const AccessRequest& pending() const { return pending_; }
  const Value& result() const { return std::get<Value>(control_); }
  ErrorCode error_code() const { return error_code_; }
  const std::string& error_message() const { return error_message_; }
  std::size_t steps() const { return steps_; }
  void rethrow_failure() const {
    if (failure_) std::rethrow_exception(failure_);
  }

 private:
  struct EvalState {
    ExprPtr expr;
    Env env;
  };
  struct AppFnFrame {
    ExprPtr arg;
    Env env;
  };
  struct AppArgFrame {
    Value fn;
  };
  struct PrimFrame {
    ExprPtr prim;  // keeps the Prim node alive
    std::size_t next = 0;
    std::vector<Value> values;
    Env env;
  };
  struct StoreFrame {
    ExprPtr store;
  };
  using Frame = std::variant<AppFnFrame, AppArgFrame, PrimFrame, StoreFrame>;

  static Value lookup(const Env& env, const std::string& name) {
    for (const Binding* b = env.get(); b; b = b->next.get()) {
      if (b->name == name) return b->value;
    }
    throw Error(ErrorCode::UnboundVariable, name);
  }

  void suspend(AccessRequest req) {
    pending_ = std::move(req);
    status_ = Status::Suspended;
  }

  void loop() {
    while (status_ == Status::Running) {
      if (++steps_ > step_limit_) throw Error(ErrorCode::StepLimit, "evaluation exceeded " + std::to_string(step_limit_) + " steps");
      if (auto* ev = std::get_if<EvalState>(&control_)) {
        eval_step(*ev);
      } else {
        return_step(std::get<Value>(control_));
      }
    }
  }

  void eval_step(EvalState ev) {
    const ExprPtr expr = ev.expr;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Var>) {
            control_ = lookup(ev.env, n.name);
          } else if constexpr (std::is_same_v<T, Lam>) {
            control_ = Value{std::make_shared<const Closure>(Closure{n.param, n.body, ev.env})};
          } else if constexpr (std::is_same_v<T, Lit>) {
            control_ = from_constant(n.value);
          } else if constexpr (std::is_same_v<T, App>) {
            stack_.push_back(AppFnFrame{n.arg, ev.env});
            control_ = EvalState{n.fn, ev.env};
          } else if constexpr (std::is_same_v<T, Prim>) {
            if (n.args.empty()) {
              control_ = detail::apply_prim(n.op, {});
            } else {
              stack_.push_back(PrimFrame{expr, 1, {}, ev.env});
              control_ = EvalState{n.args[0], ev.env};
            }
          } else if constexpr (std::is_same_v<T, Deref>) {
            suspend(AccessRequest{Access::Read, n.reg, StoreVerb::Inc, std::nullopt});
          } else {
            if (n.arg) {
              stack_.push_back(StoreFrame{expr});
              control_ = EvalState{n.arg, ev.env};
            } else {
              suspend(AccessRequest{Access::Write, n.reg, n.verb, std::nullopt});
            }
          }
        },
        expr->node);
  }

  void return_step(Value v) {
    if (stack_.empty()) {
      status_ = Status::Done;
      return;
    }
    Frame frame = std::move(stack_.back());
    stack_.pop_back();
    if (auto* f = std::get_if<AppFnFrame>(&frame)) {
      stack_.push_back(AppArgFrame{std::move(v)});
      control_ = EvalState{f->arg, f->env};
    } else if (auto* f = std::get_if<AppArgFrame>(&frame)) {
      const auto* closure = std::get_if<ClosurePtr>(&f->fn);
      if (!closure) throw Error(ErrorCode::TypeError, "cannot apply " + render(f->fn));
      const Closure& c = **closure;
      control_ = EvalState{c.body, std::make_shared<const Binding>(Binding{c.param, std::move(v), c.env})};
    } else if (auto* f = std::get_if<PrimFrame>(&frame)) {
      const auto& prim = std::get<Prim>(f->prim->node);
      f->values.push_back(std::move(v));
      if (f->next < prim.args.size()) {
        ExprPtr arg = prim.args[f->next++];
        Env env = f->env;
        stack_.push_back(std::move(*f));
        control_ = EvalState{arg, env};
      } else {
        control_ = detail::apply_prim(prim.op, f->values);
      }
    } else {
      const auto& store = std::get<Store>(std::get<StoreFrame>(frame).store->node);
      const auto* element = std::get_if<std::int64_t>(&v);
      if (!element) throw Error(ErrorCode::TypeError, "store argument must be an integer, got " + render(v));
      suspend(AccessRequest{Access::Write, store.reg, store.verb, *element});
    }
  }

  std::variant<EvalState, Value> control_;
  std::vector<Frame> stack_;
  Status status_ = Status::Running;
  AccessRequest pending_;
  ErrorCode error_code_ = ErrorCode::TypeError;
  std::string error_message_;
  std::exception_ptr failure_;
  std::size_t steps_ = 0;
  std::size_t step_limit_;
};

/// Evaluates a register-free program to completion.
inline Value evaluate_pure(const ExprPtr& program) {
  if (auto free = free_variables(program); !free.empty()) throw Error(ErrorCode::UnboundVariable, *free.begin());
  Machine m(program);
  switch (m.run()) {
    case Machine::Status::Done: return m.result();
    case Machine::Status::Failed: m.rethrow_failure(); break;
    default: break;
  }
  throw Error(ErrorCode::UnboundRegister, "program accesses register " + m.pending().reg.name);
}

}  // namespace capspace
