#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "crr/errors.hpp"
#include "crr/linalg.hpp"

namespace crr {

/// Ridge parameter, noise level and significance level shared by the
/// predictors. sigma is only consulted by the Bayesian predictor and the
/// asymptotic calculators; the conformal predictor never sees it.
struct RidgeConfig {
  double a = 1.0;        // ridge parameter, >= 0
  double sigma = 1.0;    // noise standard deviation, > 0
  double epsilon = 0.05; // significance level, in (0,1)

  void validate() const {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("RidgeConfig: a must be >= 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("RidgeConfig: sigma must be > 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("RidgeConfig: epsilon must be in (0,1)");
  }
};

/// An ordered sequence of observations (x_i, y_i), x_i in R^p.
struct Dataset {
  std::vector<Vector> objects;
  std::vector<double> labels;

  std::size_t size() const { return objects.size(); }
  std::size_t dimension() const { return objects.empty() ? 0 : objects.front().size(); }

  void append(Vector x, double y) {
    objects.push_back(std::move(x));
    labels.push_back(y);
  }

  Dataset prefix(std::size_t count) const {
    Dataset d;
    d.objects.assign(objects.begin(), objects.begin() + count);
    d.labels.assign(labels.begin(), labels.begin() + count);
    return d;
  }

  void validate() const {
    if (objects.size() != labels.size()) {
      throw DomainError("Dataset: object/label count mismatch");
    }
    const std::size_t p = dimension();
    for (const Vector& x : objects) {
      if (x.size() != p) throw DomainError("Dataset: inconsistent object dimension");
      for (double v : x)
        if (!std::isfinite(v)) throw DomainError("Dataset: non-finite object entry");
    }
    for (double y : labels)
      if (!std::isfinite(y)) throw DomainError("Dataset: non-finite label");
  }

  /// Stacks the objects into an n x p design matrix.
  Matrix design_matrix() const {
    const std::size_t n = size(), p = dimension();
    Matrix x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
      if (objects[i].size() != p) throw DomainError("Dataset: inconsistent object dimension");
      for (std::size_t j = 0; j < p; ++j) x(i, j) = objects[i][j];
    }
    return x;
  }
};

}  // namespace crr
