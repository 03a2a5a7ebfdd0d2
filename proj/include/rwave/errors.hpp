#pragma once

/// @file errors.hpp
/// @brief Exception types shared by all rwave modules.

#include <stdexcept>
#include <string>

namespace rwave {

/// Input outside the mathematical domain of an operation (e.g. c >= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Root finder could not certify a bracket.
class NoBracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An improper Y-integral was requested on a non-decaying term.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Polynomial degree in an exponential polynomial exceeded the cap.
class DegreeOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A solvability (cokernel) condition was violated beyond tolerance.
class SolvabilityError : public std::runtime_error {
 public:
  SolvabilityError(const std::string& what, double violation)
      : std::runtime_error(what), violation_(violation) {}
  double violation() const { return violation_; }

 private:
  double violation_;
};

/// Time integration became unstable (NaN, blow-up guard, Newton failure).
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario/configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A grid does not resolve the scales a comparison depends on.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwave
