#pragma once

#include <stdexcept>
#include <string>

namespace crr {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The normal-equation matrix X'X + aI could not be factorized.
class SingularSystem : public Error {
 public:
  explicit SingularSystem(const std::string& what) : Error(what) {}
};

/// A matrix expected to be symmetric was not, beyond tolerance.
class NotSymmetric : public Error {
 public:
  explicit NotSymmetric(const std::string& what) : Error(what) {}
};

/// The training objects and test object violate the diversity condition:
/// sum_i x_i x_i' - x x' + aI is not positive definite, so the one-sided
/// conformal sets need not be rays and the analytic predictor refuses.
class IrregularConfiguration : public Error {
 public:
  explicit IrregularConfiguration(const std::string& what) : Error(what) {}
};

/// The two one-sided conformal rays do not overlap.
class EmptyIntersection : public Error {
 public:
  EmptyIntersection(const std::string& what, double lower, double upper)
      : Error(what), lower_endpoint(lower), upper_endpoint(upper) {}

  double lower_endpoint;
  double upper_endpoint;
};

/// An argument was outside its mathematical domain.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/// A statistic was requested from fewer samples than it needs.
class TooFewSamples : public Error {
 public:
  explicit TooFewSamples(const std::string& what) : Error(what) {}
};

}  // namespace crr
