#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mipform {

enum class ErrorKind {
  SingularMatrix,
  NonConvergence,
  InvalidInput,
  LevelOutOfRange,
  IndexOutOfRange,
  UnknownModel,
  MissingParam,
  UnstableParams,
  InvalidAlpha,
  ZeroMass,
  ZeroRow,
  InsufficientV,
  DivergentTail,
  ParseError,
  ShapeMismatch,
  IncompatibleStructure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::MissingParam: return "MissingParam";
    case ErrorKind::UnstableParams: return "UnstableParams";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::InsufficientV: return "InsufficientV";
    case ErrorKind::DivergentTail: return "DivergentTail";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::IncompatibleStructure: return "IncompatibleStructure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mipform
