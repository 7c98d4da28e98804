#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace catebench {

enum class ErrorKind {
  EmptyOrSingleton,
  ZeroVariance,
  ParseError,
  SchemaError,
  IoError,
  EmptyInput,
  DimensionMismatch,
  EmptyArm,
  EmptyBin,
  DomainError,
  RankDeficient,
  Underdetermined,
  InvalidScenario,
  OutOfSupport,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this one exception type; callers
// branch on kind() (the CLI maps kinds onto exit codes).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix (e.g. the arm name for EmptyArm).
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace catebench
