#pragma once

#include <stdexcept>
#include <string>

namespace mfioc {

enum class ErrorKind {
  kArgument,
  kInfeasibleModel,
  kNumericalBreakdown,
  kInsufficientExcitation,
  kGenerationFailure,
  kRecoveryFailure,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return "argument";
    case ErrorKind::kInfeasibleModel: return "infeasible-model";
    case ErrorKind::kNumericalBreakdown: return "numerical-breakdown";
    case ErrorKind::kInsufficientExcitation: return "insufficient-excitation";
    case ErrorKind::kGenerationFailure: return "generation-failure";
    case ErrorKind::kRecoveryFailure: return "recovery-failure";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it to a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what)
      : Error(ErrorKind::kArgument, what) {}
};

class InfeasibleModelError : public Error {
 public:
  explicit InfeasibleModelError(const std::string& what)
      : Error(ErrorKind::kInfeasibleModel, what) {}
};

class NumericalBreakdown : public Error {
 public:
  explicit NumericalBreakdown(const std::string& what)
      : Error(ErrorKind::kNumericalBreakdown, what) {}
};

class InsufficientExcitation : public Error {
 public:
  explicit InsufficientExcitation(const std::string& what)
      : Error(ErrorKind::kInsufficientExcitation, what) {}
};

class GenerationFailure : public Error {
 public:
  explicit GenerationFailure(const std::string& what)
      : Error(ErrorKind::kGenerationFailure, what) {}
};

class RecoveryFailure : public Error {
 public:
  explicit RecoveryFailure(const std::string& what)
      : Error(ErrorKind::kRecoveryFailure, what) {}
};

}  // namespace mfioc
