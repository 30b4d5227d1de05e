#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "crr/dataset.hpp"
#include "crr/interval.hpp"
#include "crr/linalg.hpp"

// Conformalized ridge regression. A postulated label y for the test object
// is scored by how its ridge residual ranks within the residuals of the
// full sequence; the prediction set collects the labels whose p-value
// exceeds the significance level. Two routes are provided:
//
//  * a slow grid oracle that evaluates the p-value definition pointwise,
//  * the analytic route that, under the diversity (regularity) condition,
//    reduces each one-sided predictor to an order statistic of the
//    transformed residuals t_i = yhat + r_i (1+g)/(1+g_i).

namespace crr {

/// Rank-based conformity scores of a full sequence: for each i, the
/// smaller of the two one-sided residual tail counts
/// min(#{j: r_j >= r_i}, #{j: r_j <= r_i}), residuals taken from the ridge
/// fit of the whole sequence. Values lie in {1, ..., n}.
inline std::vector<int> conformity_scores(const Dataset& seq, double a) {
  seq.validate();
  if (seq.size() == 0) throw DomainError("conformity_scores: empty sequence");
  const Vector w = ridge_solve(seq.design_matrix(), seq.labels, a);
  const std::size_t n = seq.size();
  std::vector<double> residuals(n);
  for (std::size_t i = 0; i < n; ++i) {
    residuals[i] = seq.labels[i] - dot(seq.objects[i], w);
  }
  std::vector<double> sorted(residuals);
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), residuals[i]);
    const auto hi = std::upper_bound(lo, sorted.end(), residuals[i]);
    const int le = static_cast<int>(hi - sorted.begin());       // #{r_j <= r_i}
    const int ge = static_cast<int>(sorted.end() - lo);         // #{r_j >= r_i}
    scores[i] = std::min(le, ge);
  }
  return scores;
}

namespace detail {

inline Dataset with_test(const Dataset& train, const Vector& x_test, double y) {
  Dataset seq = train;
  seq.append(x_test, y);
  return seq;
}

}  // namespace detail

/// Conservative conformal p-value of the postulated label y:
/// #{i: score_i <= score_n} / n over the extended sequence. Lands on the
/// grid {1/n, ..., 1}.
inline double crr_pvalue(const Dataset& train, const Vector& x_test, double y,
                         double a) {
  const std::vector<int> scores =
      conformity_scores(detail::with_test(train, x_test, y), a);
  const int test_score = scores.back();
  std::size_t count = 0;
  for (int s : scores) count += (s <= test_score);
  return static_cast<double>(count) / static_cast<double>(scores.size());
}

/// Smoothed p-value: ties with the test score contribute tau in [0,1]
/// instead of 1. With tau drawn uniformly the predictor is exactly valid;
/// tau = 1 recovers the conservative p-value.
inline double smoothed_pvalue(const Dataset& train, const Vector& x_test,
                              double y, double a, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw DomainError("smoothed_pvalue: tau must be in [0,1]");
  }
  const std::vector<int> scores =
      conformity_scores(detail::with_test(train, x_test, y), a);
  const int test_score = scores.back();
  std::size_t below = 0, tied = 0;
  for (int s : scores) {
    below += (s < test_score);
    tied += (s == test_score);
  }
  return (static_cast<double>(below) + tau * static_cast<double>(tied)) /
         static_cast<double>(scores.size());
}

/// Pointwise evaluation of the prediction set over a grid of candidate
/// labels. The slow oracle: each grid point costs a full ridge fit.
struct GridPredictionSet {
  std::vector<double> grid;
  std::vector<bool> member;

  /// Maximal runs of consecutive members, as [first, last] grid values.
  std::vector<std::pair<double, double>> intervals() const {
    std::vector<std::pair<double, double>> runs;
    std::size_t i = 0;
    while (i < member.size()) {
      if (!member[i]) { ++i; continue; }
      std::size_t j = i;
      while (j + 1 < member.size() && member[j + 1]) ++j;
      runs.emplace_back(grid[i], grid[j]);
      i = j + 1;
    }
    return runs;
  }
};

inline GridPredictionSet crr_predict_grid(const Dataset& train, const Vector& x_test,
                                          double a, double epsilon,
                                          const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("crr_predict_grid: empty grid");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) {
      throw DomainError("crr_predict_grid: grid must be strictly increasing");
    }
  }
  GridPredictionSet out;
  out.grid = grid;
  out.member.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out.member[j] = crr_pvalue(train, x_test, grid[j], a) > epsilon;
  }
  return out;
}

/// The residual decomposition of the extended sequence: with the test
/// label set to y, the residual vector is A + yB. Computed literally from
/// the n x n hat matrix; O(n^2 p) and used as an oracle, not a fast path.
struct HatVectors {
  Vector a;  // components a_1..a_n
  Vector b;  // components b_1..b_n
};

inline HatVectors hat_matrix_ab(const Dataset& train, const Vector& x_test,
                                double a) {
  train.validate();
  const std::size_t n = train.size() + 1;
  const std::size_t p = x_test.size();
  Dataset seq = detail::with_test(train, x_test, 0.0);
  const Matrix x = seq.design_matrix();
  Matrix g = detail::gram_plus_ridge(x, a);
  if (!detail::cholesky_in_place(g)) {
    throw SingularSystem("hat_matrix_ab: X'X + aI is numerically singular");
  }
  // Rows of X (X'X+aI)^{-1} X'.
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector xi(p);
    for (std::size_t j = 0; j < p; ++j) xi[j] = x(i, j);
    const Vector ui = detail::cholesky_solve(g, xi);
    for (std::size_t j = 0; j < n; ++j) {
      double hij = 0.0;
      for (std::size_t k = 0; k < p; ++k) hij += x(j, k) * ui[k];
      h(i, j) = hij;
    }
  }
  HatVectors out;
  out.a.assign(n, 0.0);
  out.b.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double ai = (i < n - 1) ? train.labels[i] : 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) ai -= h(i, j) * train.labels[j];
    out.a[i] = ai;
    out.b[i] = ((i == n - 1) ? 1.0 : 0.0) - h(i, n - 1);
  }
  return out;
}

/// The same vectors through the training-fit leverages:
///   b_n = 1 - g/(1+g),  b_i = -g_i/(1+g),
///   a_n = -yhat/(1+g),  a_i = y_i - yhat_i + g_i yhat/(1+g).
inline HatVectors hat_vectors_from_leverages(const Dataset& train,
                                             const Vector& x_test, double a) {
  train.validate();
  const LeverageProfile prof =
      leverage_profile(train.design_matrix(), train.labels, x_test, a);
  const std::size_t n = train.size() + 1;
  const double shrink = 1.0 + prof.leverage;
  HatVectors out;
  out.a.resize(n);
  out.b.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double gi = prof.cross_leverages[i];
    out.a[i] = train.labels[i] - prof.train_predictions[i] +
               gi * prof.prediction / shrink;
    out.b[i] = -gi / shrink;
  }
  out.a[n - 1] = -prof.prediction / shrink;
  out.b[n - 1] = 1.0 - prof.leverage / shrink;
  return out;
}

/// Diversity condition: sum_i x_i x_i' - x x' + aI positive definite.
/// When it holds, b_n > b_i for all training indices and each one-sided
/// conformal set is a ray.
inline bool regularity_check(const Dataset& train, const Vector& x_test, double a) {
  const std::size_t p = x_test.size();
  Matrix m(p, p);
  for (const Vector& xi : train.objects) {
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = 0; c < p; ++c) m(r, c) += xi[r] * xi[c];
  }
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < p; ++c) m(r, c) -= x_test[r] * x_test[c];
    m(r, r) += a;
  }
  return detail::cholesky_in_place(m);
}

enum class RayDirection {
  kLowerRay,  // (-inf, endpoint]
  kUpperRay,  // [endpoint, inf)
  kFullLine,
};

struct RayPredictionSet {
  RayDirection direction = RayDirection::kFullLine;
  double endpoint = 0.0;  // meaningless for kFullLine

  bool contains(double y) const {
    switch (direction) {
      case RayDirection::kLowerRay: return y <= endpoint;
      case RayDirection::kUpperRay: return y >= endpoint;
      case RayDirection::kFullLine: return true;
    }
    return false;
  }
};

namespace detail {

// k = ceil((1 - eps) n), with a fuzz so that products that are integral as
// rationals (0.95 * 20) are not bumped up by representation error.
inline std::size_t order_statistic_rank(double eps, std::size_t n) {
  const double v = (1.0 - eps) * static_cast<double>(n);
  const double k = std::ceil(v - 1e-9);
  return k < 1.0 ? 1 : static_cast<std::size_t>(k);
}

}  // namespace detail

/// One-sided conformal predictor scoring by -residual. At significance
/// level eps_half the prediction set is the ray (-inf, t_(k)] with
/// k = ceil((1-eps_half) n) and
///   t_i = yhat + (y_i - yhat_i) (1+g)/(1+g_i),
/// all quantities from the training-only fit. Returns the full line when
/// k exceeds the number of training points (fewer observations than 1/eps).
///
/// The ray form requires b_n > b_i for every training index, which is
/// exactly 1 + g_i > 0; the diversity condition of regularity_check is
/// sufficient for this but not necessary. The predictor gates on the exact
/// condition and throws IrregularConfiguration when it fails.
inline RayPredictionSet upper_crr_predict(const Dataset& train, const Vector& x_test,
                                          double a, double eps_half) {
  if (!(eps_half > 0.0 && eps_half < 1.0)) {
    throw DomainError("upper_crr_predict: significance level must be in (0,1)");
  }
  train.validate();
  const std::size_t n = train.size() + 1;
  const std::size_t k = detail::order_statistic_rank(eps_half, n);
  if (k > n - 1) return {RayDirection::kFullLine, 0.0};
  const LeverageProfile prof =
      leverage_profile(train.design_matrix(), train.labels, x_test, a);
  for (double gi : prof.cross_leverages) {
    if (!(1.0 + gi > 0.0)) {
      throw IrregularConfiguration(
          "upper_crr_predict: b_n > b_i fails for some training point; "
          "one-sided sets need not be rays (use the grid predictor)");
    }
  }
  const double scale = 1.0 + prof.leverage;
  std::vector<double> t(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    t[i] = prof.prediction + (train.labels[i] - prof.train_predictions[i]) *
                                 scale / (1.0 + prof.cross_leverages[i]);
  }
  std::nth_element(t.begin(), t.begin() + (k - 1), t.end());
  return {RayDirection::kLowerRay, t[k - 1]};
}

/// Mirror predictor scoring by +residual, obtained by negating the labels:
/// ridge residuals are antisymmetric under Y -> -Y, so the set is the
/// reflected ray [.,inf).
inline RayPredictionSet lower_crr_predict(const Dataset& train, const Vector& x_test,
                                          double a, double eps_half) {
  Dataset negated = train;
  for (double& y : negated.labels) y = -y;
  RayPredictionSet ray = upper_crr_predict(negated, x_test, a, eps_half);
  if (ray.direction == RayDirection::kFullLine) return ray;
  return {RayDirection::kUpperRay, -ray.endpoint};
}

/// Two-sided conformal interval: the intersection of the upper and lower
/// one-sided predictors, each run at significance level epsilon/2.
inline PredictionInterval crr_predict(const Dataset& train, const Vector& x_test,
                                      double a, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("crr_predict: epsilon must be in (0,1)");
  }
  const RayPredictionSet upper = upper_crr_predict(train, x_test, a, epsilon / 2.0);
  const RayPredictionSet lower = lower_crr_predict(train, x_test, a, epsilon / 2.0);
  const double lo = lower.direction == RayDirection::kFullLine
                        ? -std::numeric_limits<double>::infinity()
                        : lower.endpoint;
  const double hi = upper.direction == RayDirection::kFullLine
                        ? std::numeric_limits<double>::infinity()
                        : upper.endpoint;
  if (lo > hi) {
    throw EmptyIntersection("crr_predict: one-sided rays do not overlap", lo, hi);
  }
  return {lo, hi, epsilon, IntervalMethod::kConformal};
}

/// crr_predict with a grid fallback for irregular configurations: the
/// interval is then the convex hull of the grid members and the flag
/// records that the oracle route was used.
struct ConformalPrediction {
  PredictionInterval interval;
  bool grid_fallback = false;
};

inline ConformalPrediction crr_predict_or_grid(const Dataset& train,
                                               const Vector& x_test, double a,
                                               double epsilon,
                                               const std::vector<double>& fallback_grid) {
  try {
    return {crr_predict(train, x_test, a, epsilon), false};
  } catch (const IrregularConfiguration&) {
    const GridPredictionSet set =
        crr_predict_grid(train, x_test, a, epsilon, fallback_grid);
    const auto runs = set.intervals();
    if (runs.empty()) {
      throw EmptyIntersection("crr_predict_or_grid: no grid point is a member",
                              std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity());
    }
    return {{runs.front().first, runs.back().second, epsilon,
             IntervalMethod::kConformal},
            true};
  }
}

/// One step of the online protocol: the interval predicted before the
/// label was revealed, and whether it covered.
struct OnlineStep {
  std::size_t step = 0;  // index of the predicted observation, 1-based
  PredictionInterval interval;
  double label = 0.0;
  bool covered = false;
  bool failed = false;
  std::string error;
};

/// Runs conformal prediction through a stream: at step n the first n-1
/// observations predict the n-th label, which is then revealed. Per-step
/// predictor errors are recorded, not fatal. Each step is a fresh
/// O(n p^2 + n log n) computation.
inline std::vector<OnlineStep> online_protocol(const Dataset& stream, double a,
                                               double epsilon) {
  stream.validate();
  if (stream.size() < 2) throw DomainError("online_protocol: stream must have >= 2 observations");
  std::vector<OnlineStep> steps;
  steps.reserve(stream.size() - 1);
  Dataset seen = stream.prefix(1);
  for (std::size_t i = 1; i < stream.size(); ++i) {
    OnlineStep step;
    step.step = i + 1;
    step.label = stream.labels[i];
    try {
      step.interval = crr_predict(seen, stream.objects[i], a, epsilon);
      step.covered = step.interval.contains(step.label);
    } catch (const Error& e) {
      step.failed = true;
      step.error = e.what();
    }
    steps.push_back(std::move(step));
    seen.append(stream.objects[i], stream.labels[i]);
  }
  return steps;
}

}  // namespace crr
