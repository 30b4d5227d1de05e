#pragma once

// Test-only oracles and instance generators. Everything here is kept
// independent of the implementation paths it is used to check: quantiles
// come from bisection on the CDF, integrals from composite Simpson,
// eigenvalues from Jacobi rotations.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "crr/dataset.hpp"
#include "crr/linalg.hpp"
#include "crr/rng.hpp"

namespace testutil {

// Bisection solve of cdf(x) = target over [-40, 40].
inline double bisect_quantile(const std::function<double(double)>& cdf, double target) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      std::size_t intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (hi - lo) / static_cast<double>(intervals);
  double sum = f(lo) + f(hi);
  for (std::size_t i = 1; i < intervals; ++i) {
    sum += f(lo + static_cast<double>(i) * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(crr::Matrix m) {
  const std::size_t n = m.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-28) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(m(p, q)) < 1e-30) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = m(i, i);
  return eig;
}

inline crr::Vector random_vector(crr::Rng& rng, std::size_t p, double scale = 1.0) {
  crr::Vector v(p);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

inline crr::Matrix random_matrix(crr::Rng& rng, std::size_t rows, std::size_t cols,
                                 double scale = 1.0) {
  crr::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

inline crr::Dataset random_dataset(crr::Rng& rng, std::size_t n, std::size_t p,
                                   double label_scale = 1.0) {
  crr::Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.append(random_vector(rng, p), label_scale * rng.gaussian());
  }
  return d;
}

}  // namespace testutil
