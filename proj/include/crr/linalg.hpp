#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "crr/errors.hpp"

// Small dense linear-algebra kernels for ridge regression in the primal
// form: the attribute count p stays small while the number of observations
// grows, so every solve goes through one Cholesky factorization of the
// p x p matrix X'X + aI.

namespace crr {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Entries must be finite.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw DomainError("matrix entry count does not match rows*cols");
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw DomainError("matrix entries must be finite");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(const Vector& x, const Vector& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

namespace detail {

// Relative pivot tolerance for Cholesky: a pivot below 1e-12 times the
// largest diagonal entry counts as zero.
inline constexpr double kPivotRelTol = 1e-12;

// In-place lower Cholesky of a symmetric matrix stored fully.
// Returns false when some pivot is not strictly above tolerance.
inline bool cholesky_in_place(Matrix& m) {
  const std::size_t n = m.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, m(i, i));
  const double tol = kPivotRelTol * max_diag;
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= m(j, k) * m(j, k);
    if (!(d > tol) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    m(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
      m(i, j) = s / ljj;
    }
  }
  return true;
}

// Solves L L' x = b given the lower factor in m.
inline Vector cholesky_solve(const Matrix& m, const Vector& b) {
  const std::size_t n = m.rows();
  Vector x(b);
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= m(i, k) * x[k];
    x[i] = s / m(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= m(k, ii) * x[k];
    x[ii] = s / m(ii, ii);
  }
  return x;
}

inline Matrix symmetrized(const Matrix& m) {
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

inline void check_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
  double scale = 0.0;
  for (double v : m.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * std::max(scale, 1.0)) {
        throw NotSymmetric("matrix is not symmetric within tolerance");
      }
    }
  }
}

// X'X + aI for an m x p design matrix.
inline Matrix gram_plus_ridge(const Matrix& x, double a) {
  const std::size_t p = x.cols();
  Matrix g(p, p);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      const double xi = x(r, i);
      if (xi == 0.0) continue;
      for (std::size_t j = i; j < p; ++j) g(i, j) += xi * x(r, j);
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    g(i, i) += a;
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  }
  return g;
}

inline Vector transpose_times(const Matrix& x, const Vector& y) {
  Vector r(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) r[j] += x(i, j) * y[i];
  return r;
}

}  // namespace detail

/// Ridge solution w = (X'X + aI)^{-1} X'Y.
///
/// Throws SingularSystem when the normal matrix cannot be factorized,
/// which for a = 0 means X'X is numerically singular.
inline Vector ridge_solve(const Matrix& x, const Vector& y, double a) {
  if (x.rows() != y.size()) throw DomainError("ridge_solve: row/label mismatch");
  if (a < 0.0) throw DomainError("ridge_solve: ridge parameter must be >= 0");
  Matrix g = detail::gram_plus_ridge(x, a);
  if (!detail::cholesky_in_place(g)) {
    throw SingularSystem("ridge_solve: X'X + aI is numerically singular");
  }
  return detail::cholesky_solve(g, detail::transpose_times(x, y));
}

/// Everything a single prediction needs from one factorization of
/// X'X + aI: the point prediction for the test object, its leverage
/// g = x'(X'X+aI)^{-1}x, the fitted values of the training points, and
/// their cross-leverages g_i = x_i'(X'X+aI)^{-1}x (which may be negative).
struct LeverageProfile {
  double prediction = 0.0;         // yhat for the test object
  double leverage = 0.0;           // g >= 0
  Vector train_predictions;        // yhat_i, i = 1..m
  Vector cross_leverages;          // g_i,   i = 1..m
};

inline LeverageProfile leverage_profile(const Matrix& x, const Vector& y,
                                        const Vector& x_test, double a) {
  if (x.rows() != y.size()) throw DomainError("leverage_profile: row/label mismatch");
  if (x.cols() != x_test.size()) throw DomainError("leverage_profile: dimension mismatch");
  Matrix g = detail::gram_plus_ridge(x, a);
  if (!detail::cholesky_in_place(g)) {
    throw SingularSystem("leverage_profile: X'X + aI is numerically singular");
  }
  const Vector w = detail::cholesky_solve(g, detail::transpose_times(x, y));
  const Vector u = detail::cholesky_solve(g, x_test);

  LeverageProfile out;
  out.prediction = dot(x_test, w);
  out.leverage = std::max(0.0, dot(x_test, u));  // quadratic form, >= 0 up to roundoff
  const std::size_t m = x.rows();
  out.train_predictions.resize(m);
  out.cross_leverages.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double yh = 0.0, gi = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      yh += x(i, j) * w[j];
      gi += x(i, j) * u[j];
    }
    out.train_predictions[i] = yh;
    out.cross_leverages[i] = gi;
  }
  return out;
}

/// True iff the symmetrized matrix admits a Cholesky factorization with
/// all pivots strictly positive (above the relative pivot tolerance).
/// Throws NotSymmetric when the input is not symmetric within 1e-12.
inline bool is_positive_definite(const Matrix& m) {
  detail::check_symmetric(m);
  Matrix s = detail::symmetrized(m);
  return detail::cholesky_in_place(s);
}

/// mu' (C + mu mu')^{-1} mu evaluated through the rank-one update identity
/// as t/(1+t) with t = mu' C^{-1} mu. Always lands in [0,1].
///
/// A singular C is handled as the limit of C + dI with d -> 0: the result
/// is computed at a single tiny jitter d, which reproduces the limit to
/// within ~1e-10 (for mu outside the range of C the limit is 1).
inline double quadform_identity(const Vector& mu, const Matrix& c) {
  if (c.rows() != c.cols() || c.rows() != mu.size()) {
    throw DomainError("quadform_identity: dimension mismatch");
  }
  Matrix s = detail::symmetrized(c);
  Matrix f = s;
  if (!detail::cholesky_in_place(f)) {
    // Jitter must clear the pivot tolerance; it perturbs the limit by ~1e-10.
    double scale = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) scale = std::max(scale, std::abs(s(i, i)));
    const double jitter = 1e-10 * std::max(scale, 1.0);
    f = s;
    for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) += jitter;
    if (!detail::cholesky_in_place(f)) {
      throw DomainError("quadform_identity: matrix is not positive semidefinite");
    }
  }
  const double t = std::max(0.0, dot(mu, detail::cholesky_solve(f, mu)));
  const double q = t / (1.0 + t);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace crr
