#pragma once

#include <stdexcept>
#include <string>

namespace tubenull {

/// A gauge violates a hypothesis the construction relies on (doubling, monotonicity).
class invalid_gauge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A curve fails its family's invariants (e.g. a right derivative outside [0,1]).
class invalid_curve : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Adaptive quadrature or root bracketing did not reach its tolerance.
class numeric_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A generated family would exceed the configured size cap.
class cardinality_exceeded : public std::length_error {
 public:
  cardinality_exceeded(const std::string& what, double estimate)
      : std::length_error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

}  // namespace tubenull
