#pragma once

#include <stdexcept>
#include <string>

namespace securakit {

/// Broad class of a failure; the CLI maps these onto exit codes.
enum class ErrorCategory {
  validation,  // bad input values or documents
  numerical,   // singular systems, non-convergence, unreachable targets
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// A parameter or argument is outside the domain of the operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

/// A function is evaluated at a point where it diverges (e.g. the Weibull
/// density at t = 0 with shape < 1).
class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// The first-order discretisation I + dt*Q would leave the stochastic cone.
class StepTooLargeError : public Error {
 public:
  explicit StepTooLargeError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

class ReducibleChainError : public Error {
 public:
  explicit ReducibleChainError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

class SingularSystemError : public Error {
 public:
  explicit SingularSystemError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// A target set (failure or repair states) cannot be reached.
class UnreachableError : public Error {
 public:
  explicit UnreachableError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// A simulated trajectory exceeded the event cap without being absorbed.
class RunawayTrialError : public Error {
 public:
  explicit RunawayTrialError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

}  // namespace securakit
