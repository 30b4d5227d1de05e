#pragma once

#include <cmath>

#include "crr/dataset.hpp"
#include "crr/interval.hpp"
#include "crr/linalg.hpp"
#include "crr/normal.hpp"

// Bayesian ridge regression under the Gaussian data model: labels are
// w.x + noise with w ~ N(0, (sigma^2/a) I) and noise ~ N(0, sigma^2).
// The model has no intercept; append a constant attribute to get one
// (it is then shrunk like any other weight).

namespace crr {

/// Mean and variance of the predictive distribution for the test label:
/// N(yhat, (1 + g) sigma^2) with g the test object's leverage.
struct GaussianMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline GaussianMoments brr_predictive_distribution(const Dataset& train,
                                                   const Vector& x_test,
                                                   const RidgeConfig& cfg) {
  cfg.validate();
  train.validate();
  const LeverageProfile profile =
      leverage_profile(train.design_matrix(), train.labels, x_test, cfg.a);
  return {profile.prediction,
          (1.0 + profile.leverage) * cfg.sigma * cfg.sigma};
}

/// Central (1 - epsilon) predictive interval:
/// yhat -/+ sqrt(1+g) sigma z_{epsilon/2}, exactly symmetric about yhat.
inline PredictionInterval brr_predict(const Dataset& train, const Vector& x_test,
                                      const RidgeConfig& cfg) {
  const GaussianMoments m = brr_predictive_distribution(train, x_test, cfg);
  const double half_width =
      std::sqrt(m.variance) * normal_quantile(cfg.epsilon / 2.0);
  return {m.mean - half_width, m.mean + half_width, cfg.epsilon,
          IntervalMethod::kBayes};
}

}  // namespace crr
