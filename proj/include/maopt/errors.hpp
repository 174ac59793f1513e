#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maopt {

enum class ErrorKind {
  invalid_input,
  unsupported_configuration,
  singular_channel,
  degenerate_scenario,
  convergence,
  numeric,
  infeasible_point,
  infeasible_init,
  config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::unsupported_configuration: return "unsupported-configuration";
    case ErrorKind::singular_channel: return "singular-channel";
    case ErrorKind::degenerate_scenario: return "degenerate-scenario";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::infeasible_point: return "infeasible-point";
    case ErrorKind::infeasible_init: return "infeasible-init";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind and the name of the
/// operation that raised it, so front ends can map it to an exit code and
/// name the failing module in diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " in " + where + ": " + what),
        kind_(kind),
        where_(std::move(where)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

/// Raised when the DE Newton solver does not meet its stopping rule.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string where, const std::string& what, double residual)
      : Error(ErrorKind::convergence, std::move(where), what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string where, const std::string& what) {
  throw Error(kind, std::move(where), what);
}

}  // namespace maopt
