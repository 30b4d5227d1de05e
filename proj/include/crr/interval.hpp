#pragma once

#include <limits>

#include "crr/errors.hpp"

namespace crr {

enum class IntervalMethod {
  kBayes,           // Gaussian-model interval
  kConformal,       // two-sided conformal interval
  kUpperConformal,  // one-sided, set of the form (-inf, t]
  kLowerConformal,  // one-sided, set of the form [t, inf)
};

inline const char* to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::kBayes: return "brr";
    case IntervalMethod::kConformal: return "crr";
    case IntervalMethod::kUpperConformal: return "upper_crr";
    case IntervalMethod::kLowerConformal: return "lower_crr";
  }
  return "?";
}

/// A prediction interval [lower, upper]; either endpoint may be infinite.
struct PredictionInterval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  IntervalMethod method = IntervalMethod::kBayes;

  bool contains(double y) const { return lower <= y && y <= upper; }
  double width() const { return upper - lower; }
  bool is_full_line() const {
    return lower == -std::numeric_limits<double>::infinity() &&
           upper == std::numeric_limits<double>::infinity();
  }
};

}  // namespace crr
