#pragma once

#include <stdexcept>
#include <string>

namespace coopucb {

/// Bad input: malformed graphs, inadmissible parameters, config mistakes.
/// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GraphErrorKind {
  empty,
  not_square,
  not_binary,
  not_symmetric,
  self_loop,
  disconnected,
  connectivity_cap_exceeded,
  bad_edge_list,
};

class GraphError : public ValidationError {
 public:
  GraphError(GraphErrorKind kind, const std::string& what)
      : ValidationError(what), kind_(kind) {}

  GraphErrorKind kind() const noexcept { return kind_; }

 private:
  GraphErrorKind kind_;
};

/// The consensus matrix has an eigenvalue outside (-1, 1] beyond the leading one.
class SpectrumError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// mu_hat / UCB bonus requested while n_hat is still zero.
class EstimateUnavailable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A property that must hold by construction was observed to fail during a
/// run (sandwich bound, nonnegative counts, conservation). Exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace coopucb
