#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace capspace {

/// Simulated time in milliseconds. There is one global clock.
using Millis = std::int64_t;

struct NodeId {
  std::uint32_t value = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend std::ostream& operator<<(std::ostream& out, NodeId id) { return out << id.value; }
};

/// Identifies the replica that issued an update. The runtime uses the node id.
struct ActorId {
  std::uint32_t value = 0;

  friend auto operator<=>(const ActorId&, const ActorId&) = default;
  friend std::ostream& operator<<(std::ostream& out, ActorId id) { return out << id.value; }
};

inline ActorId actor_of(NodeId node) { return ActorId{node.value}; }

struct RegisterId {
  std::string name;

  friend auto operator<=>(const RegisterId&, const RegisterId&) = default;
  friend std::ostream& operator<<(std::ostream& out, const RegisterId& id) { return out << id.name; }
};

enum class ErrorCode {
  KindMismatch,
  InvalidOp,
  InvalidKind,
  UnboundRegister,
  UnboundVariable,
  TypeError,
  StalenessUnsatisfiable,
  NotAReplica,
  NodeDown,
  InvalidNode,
  OverlappingGroups,
  InvalidPolicy,
  ParseError,
  ValidationError,
  TooLarge,
  UnknownParameter,
  Aborted,
  StepLimit,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::InvalidOp: return "InvalidOp";
    case ErrorCode::InvalidKind: return "InvalidKind";
    case ErrorCode::UnboundRegister: return "UnboundRegister";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::StalenessUnsatisfiable: return "StalenessUnsatisfiable";
    case ErrorCode::NotAReplica: return "NotAReplica";
    case ErrorCode::NodeDown: return "NodeDown";
    case ErrorCode::InvalidNode: return "InvalidNode";
    case ErrorCode::OverlappingGroups: return "OverlappingGroups";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::Aborted: return "Aborted";
    case ErrorCode::StepLimit: return "StepLimit";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace capspace

template <>
struct std::hash<capspace::NodeId> {
  std::size_t operator()(capspace::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

template <>
struct std::hash<capspace::RegisterId> {
  std::size_t operator()(const capspace::RegisterId& id) const noexcept {
    return std::hash<std::string>{}(id.name);
  }
};
