#pragma once

#include <cmath>

#include "crr/errors.hpp"

// Normal-distribution special functions. The quantile uses Acklam's
// rational approximation refined by one Newton step with the analytic
// density, which brings |Phi(z_d) - (1-d)| below 1e-12 everywhere.

namespace crr {

inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Density of N(0, sigma^2) at x.
inline double normal_pdf(double x, double sigma = 1.0) {
  if (!(sigma > 0.0)) throw DomainError("normal_pdf: sigma must be > 0");
  const double z = x / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

/// Distribution function of N(0, sigma^2) at x, via the complementary
/// error function (accurate in both tails).
inline double normal_cdf(double x, double sigma = 1.0) {
  if (!(sigma > 0.0)) throw DomainError("normal_cdf: sigma must be > 0");
  return 0.5 * std::erfc(-x / (sigma * kSqrt2));
}

namespace detail {

// Acklam's inverse normal CDF (lower tail), |relative error| < 1.15e-9
// before refinement. Valid for p in (0,1).
inline double acklam_inverse_cdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Newton step against the exact CDF. Skipped in the far tail where
  // the density underflows.
  const double density = normal_pdf(x);
  if (density > 0.0) x -= (normal_cdf(x) - p) / density;
  return x;
}

}  // namespace detail

/// Upper delta-quantile of the standard normal: z_d = Phi^{-1}(1 - d).
/// Computed as -Phi^{-1}(d) so no precision is lost forming 1 - d.
inline double normal_quantile(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("normal_quantile: delta must be in (0,1)");
  }
  return -detail::acklam_inverse_cdf(delta);
}

/// The truncated first moment of N(0, sigma^2) up to zeta:
/// integral of x f(x) over (-inf, zeta], in closed form -sigma^2 f(zeta).
inline double mu_alpha(double zeta, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("mu_alpha: sigma must be > 0");
  return -sigma * sigma * normal_pdf(zeta, sigma);
}

}  // namespace crr
