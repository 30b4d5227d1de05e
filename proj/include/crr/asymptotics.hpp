#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "crr/errors.hpp"
#include "crr/normal.hpp"

// Closed forms for the limiting variance of the sqrt(n)-scaled difference
// between the Bayesian and conformal interval endpoints, the small-epsilon
// asymptote of its standard deviation, and the table behind the
// standard-deviation curves.

namespace crr {

/// Inputs of the limiting-variance formula. quadform_m is mu' Sigma^{-1} mu
/// for the object law, always in [0,1].
struct TheoremVarianceSpec {
  double epsilon = 0.05;
  double sigma = 1.0;
  double quadform_m = 0.0;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      throw DomainError("TheoremVarianceSpec: epsilon must be in (0,1)");
    }
    if (!(sigma > 0.0)) throw DomainError("TheoremVarianceSpec: sigma must be > 0");
    if (!(quadform_m >= 0.0 && quadform_m <= 1.0)) {
      throw DomainError("TheoremVarianceSpec: quadform must be in [0,1]");
    }
  }
};

struct VarianceResult {
  double variance = 0.0;
  double std_dev = 0.0;
  bool clamped = false;  // true when a tiny negative value was clamped to 0
};

/// Limiting variance in the density form
///   alpha(1-alpha) / f^2(zeta_alpha) - sigma^2 m,
/// with alpha = 1 - epsilon/2, zeta_alpha the alpha-quantile of N(0,sigma^2)
/// and f its density. Nonnegative for m in [0,1]; values in (-1e-9, 0)
/// caused by cancellation are clamped to zero.
inline VarianceResult theorem1_variance(const TheoremVarianceSpec& spec) {
  spec.validate();
  const double alpha = 1.0 - spec.epsilon / 2.0;
  const double zeta = normal_quantile(spec.epsilon / 2.0) * spec.sigma;
  const double f = normal_pdf(zeta, spec.sigma);
  double variance = alpha * (1.0 - alpha) / (f * f) -
                    spec.sigma * spec.sigma * spec.quadform_m;
  VarianceResult out;
  if (variance < 0.0) {
    if (variance <= -1e-9) {
      throw DomainError("theorem1_variance: variance is negative beyond cancellation noise");
    }
    variance = 0.0;
    out.clamped = true;
  }
  out.variance = variance;
  out.std_dev = std::sqrt(variance);
  return out;
}

/// The same variance in the exponential form
///   sigma^2 (epsilon (1 - epsilon/2) pi e^{z^2} - m),  z = z_{epsilon/2}.
/// Algebraically identical to the density form; kept as a second route for
/// identity checks.
inline double theorem1_variance_expform(double epsilon, double sigma, double quadform_m) {
  TheoremVarianceSpec spec{epsilon, sigma, quadform_m};
  spec.validate();
  const double z = normal_quantile(epsilon / 2.0);
  constexpr double pi = 3.14159265358979323846;
  return sigma * sigma *
         (epsilon * (1.0 - epsilon / 2.0) * pi * std::exp(z * z) - quadform_m);
}

/// Small-epsilon asymptote of the limiting standard deviation:
/// (-epsilon ln epsilon)^{-1/2}.
inline double std_asymptote(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("std_asymptote: epsilon must be in (0,1)");
  }
  return 1.0 / std::sqrt(-epsilon * std::log(epsilon));
}

/// One row per significance level: the limiting standard deviation at
/// m = 0 (upper curve) and m = 1 (lower curve) for sigma = 1, plus the
/// asymptote.
struct CurveTable {
  struct Row {
    double epsilon;
    double std_upper;
    double std_lower;
    double asymptote;
  };
  std::vector<Row> rows;

  /// CSV with header epsilon,std_upper,std_lower,asymptote, 6 significant
  /// digits per value.
  std::string to_csv() const {
    std::string out = "epsilon,std_upper,std_lower,asymptote\n";
    char line[128];
    for (const Row& r : rows) {
      std::snprintf(line, sizeof(line), "%.6g,%.6g,%.6g,%.6g\n", r.epsilon,
                    r.std_upper, r.std_lower, r.asymptote);
      out += line;
    }
    return out;
  }
};

inline CurveTable curve_table(const std::vector<double>& eps_grid) {
  CurveTable table;
  table.rows.reserve(eps_grid.size());
  double prev = 0.0;
  for (double eps : eps_grid) {
    if (!(eps > 0.0 && eps < 1.0)) {
      throw DomainError("curve_table: grid values must be in (0,1)");
    }
    if (!(eps > prev)) throw DomainError("curve_table: grid must be strictly increasing");
    prev = eps;
    const double var_upper = theorem1_variance({eps, 1.0, 0.0}).variance;
    const double var_lower = var_upper - 1.0;  // m contributes -sigma^2 m, sigma = 1
    table.rows.push_back({eps, std::sqrt(var_upper), std::sqrt(var_lower),
                          std_asymptote(eps)});
  }
  return table;
}

}  // namespace crr
