#pragma once

#include <stdexcept>
#include <string>

namespace dscrd {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent model: dimension mismatch, asymmetric or indefinite
// covariance, non-square mixing, malformed topology.
class ModelError : public Error {
 public:
  using Error::Error;
};

// A matrix that must be inverted is numerically singular.
class SingularMatrixError : public ModelError {
 public:
  SingularMatrixError(const std::string& what, double rcond)
      : ModelError(what + " (rcond=" + std::to_string(rcond) + ")"), rcond_(rcond) {}

  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

// A distortion target outside the range where the rate formula applies.
class InfeasibleTargetError : public Error {
 public:
  using Error::Error;
};

// Monte Carlo estimate disagrees with its closed form beyond the hard limit.
class MonteCarloMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace dscrd
