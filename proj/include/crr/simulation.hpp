#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crr/asymptotics.hpp"
#include "crr/bayes.hpp"
#include "crr/conformal.hpp"
#include "crr/dataset.hpp"
#include "crr/normal.hpp"
#include "crr/rng.hpp"
#include "crr/stats.hpp"

// Seeded Monte Carlo experiments: coverage of the conformal predictor
// under IID sampling, and the distribution of the sqrt(n)-scaled
// differences between the Bayesian and conformal interval endpoints.
// Trials run on any number of workers; every trial derives its own RNG
// stream from (seed, trial index), so reports are reproducible bit for
// bit regardless of scheduling.

namespace crr {

enum class ObjectLaw {
  kStandardGaussian,  // N(0, I_p)
  kUniformCube,       // uniform on [0,1]^p
  kConstantOne,       // x = 1 (p must be 1)
  kGaussianWithMean,  // N(mean, I_p)
};

enum class WeightLaw {
  kGaussianPrior,  // w ~ N(0, (sigma^2/a) I_p), drawn once per dataset
  kFixed,
};

inline const char* to_string(ObjectLaw law) {
  switch (law) {
    case ObjectLaw::kStandardGaussian: return "standard_gaussian";
    case ObjectLaw::kUniformCube: return "uniform_cube";
    case ObjectLaw::kConstantOne: return "constant_one";
    case ObjectLaw::kGaussianWithMean: return "gaussian_mean";
  }
  return "?";
}

inline const char* to_string(WeightLaw law) {
  return law == WeightLaw::kGaussianPrior ? "gaussian_prior" : "fixed";
}

struct GenerativeSpec {
  std::size_t dimension = 1;
  ObjectLaw object_law = ObjectLaw::kStandardGaussian;
  std::vector<double> object_mean;     // kGaussianWithMean only
  WeightLaw weight_law = WeightLaw::kGaussianPrior;
  std::vector<double> fixed_weights;   // kFixed only
  double prior_ridge_a = 1.0;          // prior variance is sigma^2 / prior_ridge_a
  double sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (dimension < 1) throw DomainError("GenerativeSpec: dimension must be >= 1");
    if (!(sigma > 0.0)) throw DomainError("GenerativeSpec: sigma must be > 0");
    if (object_law == ObjectLaw::kConstantOne && dimension != 1) {
      throw DomainError(
          "GenerativeSpec: constant objects have a singular second-moment "
          "matrix unless dimension is 1");
    }
    if (object_law == ObjectLaw::kGaussianWithMean &&
        object_mean.size() != dimension) {
      throw DomainError("GenerativeSpec: mean vector size must equal dimension");
    }
    if (weight_law == WeightLaw::kFixed && fixed_weights.size() != dimension) {
      throw DomainError("GenerativeSpec: fixed weight size must equal dimension");
    }
    if (weight_law == WeightLaw::kGaussianPrior && !(prior_ridge_a > 0.0)) {
      throw DomainError("GenerativeSpec: prior needs a ridge parameter > 0");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"dimension", dimension},
                     {"object_law", to_string(object_law)},
                     {"weight_law", to_string(weight_law)},
                     {"sigma", sigma},
                     {"seed", seed}};
    if (object_law == ObjectLaw::kGaussianWithMean) j["object_mean"] = object_mean;
    if (weight_law == WeightLaw::kFixed) j["fixed_weights"] = fixed_weights;
    if (weight_law == WeightLaw::kGaussianPrior) j["prior_ridge_a"] = prior_ridge_a;
    return j;
  }
};

namespace detail {

inline Vector draw_object(const GenerativeSpec& spec, Rng& rng) {
  Vector x(spec.dimension);
  switch (spec.object_law) {
    case ObjectLaw::kStandardGaussian:
      for (double& v : x) v = rng.gaussian();
      break;
    case ObjectLaw::kUniformCube:
      for (double& v : x) v = rng.uniform01();
      break;
    case ObjectLaw::kConstantOne:
      x[0] = 1.0;
      break;
    case ObjectLaw::kGaussianWithMean:
      for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = spec.object_mean[j] + rng.gaussian();
      }
      break;
  }
  return x;
}

template <class Fn>
void for_each_trial(std::size_t trials, std::size_t threads, Fn&& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min<std::size_t>(threads, std::max<std::size_t>(trials, 1));
  if (threads <= 1) {
    for (std::size_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
        fn(t);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace detail

/// Draws n observations: objects IID from the object law, labels
/// y = w.x + noise with noise ~ N(0, sigma^2). The weight vector is fixed
/// or drawn once per dataset from the prior. Weights, objects and noise
/// use separate substreams of the seed, so the same seed always yields
/// the same dataset.
inline Dataset generate_dataset(const GenerativeSpec& spec, std::size_t n) {
  spec.validate();
  Rng weight_rng(derive_stream_seed(spec.seed, 0));
  Rng object_rng(derive_stream_seed(spec.seed, 1));
  Rng noise_rng(derive_stream_seed(spec.seed, 2));

  Vector w(spec.dimension);
  if (spec.weight_law == WeightLaw::kFixed) {
    w = spec.fixed_weights;
  } else {
    const double prior_sd = spec.sigma / std::sqrt(spec.prior_ridge_a);
    for (double& v : w) v = prior_sd * weight_rng.gaussian();
  }

  Dataset data;
  data.objects.reserve(n);
  data.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = detail::draw_object(spec, object_rng);
    const double y = dot(w, x) + spec.sigma * noise_rng.gaussian();
    data.append(std::move(x), y);
  }
  return data;
}

/// mu' Sigma^{-1} mu of the object law, in closed form.
inline double quadform_for_law(const GenerativeSpec& spec) {
  spec.validate();
  switch (spec.object_law) {
    case ObjectLaw::kStandardGaussian:
      return 0.0;  // zero mean
    case ObjectLaw::kUniformCube: {
      // mu = 1/2, C = I/12: mu'C^{-1}mu = 3p.
      const double t = 3.0 * static_cast<double>(spec.dimension);
      return t / (1.0 + t);
    }
    case ObjectLaw::kConstantOne:
      return 1.0;
    case ObjectLaw::kGaussianWithMean: {
      const double t = dot(spec.object_mean, spec.object_mean);  // mu'C^{-1}mu, C = I
      return t / (1.0 + t);
    }
  }
  return 0.0;
}

/// Monte Carlo estimate of mu' Sigma^{-1} mu from object draws, through
/// the rank-one update identity on the sample mean and covariance.
inline double estimate_quadform(const GenerativeSpec& spec, std::size_t draws) {
  spec.validate();
  if (draws < 2) throw TooFewSamples("estimate_quadform: need at least 2 draws");
  Rng rng(derive_stream_seed(spec.seed, 7));
  const std::size_t p = spec.dimension;
  Vector mean(p, 0.0);
  Matrix second(p, p);
  for (std::size_t t = 0; t < draws; ++t) {
    const Vector x = detail::draw_object(spec, rng);
    for (std::size_t i = 0; i < p; ++i) {
      mean[i] += x[i];
      for (std::size_t j = 0; j < p; ++j) second(i, j) += x[i] * x[j];
    }
  }
  const double dn = static_cast<double>(draws);
  Matrix cov(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    mean[i] /= dn;
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      cov(i, j) = second(i, j) / dn - mean[i] * mean[j];
    }
  }
  return quadform_identity(mean, cov);
}

/// Report of a coverage experiment: per trial, n observations are drawn,
/// the first n-1 predict the n-th label, and membership of the true label
/// in the conformal prediction set is recorded (conservative and smoothed
/// p-values), alongside coverage of the Bayesian interval.
struct CoverageReport {
  GenerativeSpec spec;
  std::size_t sample_size = 0;
  double ridge_a = 0.0;
  double epsilon = 0.0;
  std::size_t trials = 0;

  std::size_t crr_covered = 0;
  std::size_t smoothed_covered = 0;
  std::size_t brr_covered = 0;
  std::size_t error_trials = 0;
  std::vector<std::uint8_t> per_trial_crr;       // 1 = covered
  std::vector<std::uint8_t> per_trial_smoothed;
  std::vector<std::uint8_t> per_trial_brr;

  std::size_t valid_trials() const { return trials - error_trials; }
  double crr_coverage() const {
    return static_cast<double>(crr_covered) / static_cast<double>(valid_trials());
  }
  double smoothed_coverage() const {
    return static_cast<double>(smoothed_covered) / static_cast<double>(valid_trials());
  }
  double brr_coverage() const {
    return static_cast<double>(brr_covered) / static_cast<double>(valid_trials());
  }
  /// Binomial standard error at the target coverage 1 - epsilon.
  double binomial_se() const {
    return std::sqrt(epsilon * (1.0 - epsilon) / static_cast<double>(valid_trials()));
  }
  bool conservative_pass() const {
    return crr_coverage() >= 1.0 - epsilon - 3.0 * binomial_se();
  }
  bool smoothed_pass() const {
    return std::abs(smoothed_coverage() - (1.0 - epsilon)) <= 3.0 * binomial_se();
  }
  bool brr_pass() const {
    return std::abs(brr_coverage() - (1.0 - epsilon)) <= 3.0 * binomial_se();
  }

  nlohmann::json to_json(bool include_per_trial = false) const {
    nlohmann::json j;
    j["experiment"] = "coverage";
    j["config"] = {{"generative", spec.to_json()},
                   {"n", sample_size},
                   {"a", ridge_a},
                   {"epsilon", epsilon},
                   {"trials", trials}};
    j["seed"] = spec.seed;
    j["summary"] = {{"crr_coverage", crr_coverage()},
                    {"smoothed_coverage", smoothed_coverage()},
                    {"brr_coverage", brr_coverage()},
                    {"binomial_se", binomial_se()},
                    {"error_trials", error_trials}};
    j["checks"] = {{"conservative_pass", conservative_pass()},
                   {"smoothed_pass", smoothed_pass()},
                   {"brr_pass", brr_pass()}};
    if (include_per_trial) {
      j["per_trial"] = {{"crr", per_trial_crr},
                        {"smoothed", per_trial_smoothed},
                        {"brr", per_trial_brr}};
    }
    return j;
  }

  static std::string csv_header() {
    return "experiment,object_law,n,a,epsilon,trials,errors,crr_coverage,"
           "smoothed_coverage,brr_coverage,binomial_se";
  }
  std::string csv_line() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "coverage,%s,%zu,%g,%g,%zu,%zu,%.6g,%.6g,%.6g,%.6g",
                  to_string(spec.object_law), sample_size, ridge_a, epsilon, trials,
                  error_trials, crr_coverage(), smoothed_coverage(), brr_coverage(),
                  binomial_se());
    return buf;
  }
};

inline CoverageReport coverage_experiment(const GenerativeSpec& spec, std::size_t n,
                                          double a, double epsilon,
                                          std::size_t trials,
                                          std::size_t threads = 0) {
  spec.validate();
  if (n < 2) throw DomainError("coverage_experiment: n must be >= 2");
  if (trials < 1) throw DomainError("coverage_experiment: trials must be >= 1");
  RidgeConfig cfg{a, spec.sigma, epsilon};
  cfg.validate();

  CoverageReport report;
  report.spec = spec;
  report.sample_size = n;
  report.ridge_a = a;
  report.epsilon = epsilon;
  report.trials = trials;
  report.per_trial_crr.assign(trials, 0);
  report.per_trial_smoothed.assign(trials, 0);
  report.per_trial_brr.assign(trials, 0);
  std::vector<std::uint8_t> failed(trials, 0);

  detail::for_each_trial(trials, threads, [&](std::size_t t) {
    GenerativeSpec trial_spec = spec;
    trial_spec.seed = derive_stream_seed(spec.seed, t);
    try {
      const Dataset data = generate_dataset(trial_spec, n);
      const Dataset train = data.prefix(n - 1);
      const Vector& x = data.objects[n - 1];
      const double y = data.labels[n - 1];
      report.per_trial_crr[t] = crr_pvalue(train, x, y, a) > epsilon;
      const double tau = Rng(derive_stream_seed(trial_spec.seed, 3)).uniform01();
      report.per_trial_smoothed[t] = smoothed_pvalue(train, x, y, a, tau) > epsilon;
      report.per_trial_brr[t] = brr_predict(train, x, cfg).contains(y);
    } catch (const Error&) {
      failed[t] = 1;
    }
  });

  for (std::size_t t = 0; t < trials; ++t) {
    if (failed[t]) {
      ++report.error_trials;
      continue;
    }
    report.crr_covered += report.per_trial_crr[t];
    report.smoothed_covered += report.per_trial_smoothed[t];
    report.brr_covered += report.per_trial_brr[t];
  }
  return report;
}

/// Report of the endpoint-difference experiment: per trial,
/// sqrt(n)(B* - C*) for the upper endpoints and the mirrored quantity for
/// the lower endpoints, compared against the limiting normal law.
struct EndpointDiffReport {
  GenerativeSpec spec;
  std::size_t sample_size = 0;
  double ridge_a = 0.0;
  double epsilon = 0.0;
  std::size_t trials = 0;

  std::size_t excluded_trials = 0;  // diversity condition failed
  std::size_t error_trials = 0;
  std::vector<double> upper_diffs;  // sqrt(n)(B* - C*), trial order
  std::vector<double> lower_diffs;  // sqrt(n)(B_* - C_*)

  double theoretical_quadform = 0.0;
  double theoretical_variance = 0.0;
  double theoretical_std = 0.0;

  MomentSummary upper_summary;
  MomentSummary lower_summary;
  KsResult upper_ks;     // one-sample vs N(0, theoretical_variance)
  KsResult lower_ks;
  KsResult symmetry_ks;  // two-sample, upper vs lower

  double mean_tolerance(const MomentSummary& s) const {
    return 3.0 * s.std_dev / std::sqrt(static_cast<double>(s.count));
  }
  bool mean_pass() const {
    return std::abs(upper_summary.mean) <= mean_tolerance(upper_summary) &&
           std::abs(lower_summary.mean) <= mean_tolerance(lower_summary);
  }
  bool std_pass(double rel_tol = 0.10) const {
    return std::abs(upper_summary.std_dev / theoretical_std - 1.0) <= rel_tol &&
           std::abs(lower_summary.std_dev / theoretical_std - 1.0) <= rel_tol;
  }
  bool ks_pass(double min_p = 0.001) const {
    return upper_ks.p_value > min_p && lower_ks.p_value > min_p;
  }

  nlohmann::json to_json(bool include_per_trial = false) const {
    nlohmann::json j;
    j["experiment"] = "endpoint_diff";
    j["config"] = {{"generative", spec.to_json()},
                   {"n", sample_size},
                   {"a", ridge_a},
                   {"epsilon", epsilon},
                   {"trials", trials}};
    j["seed"] = spec.seed;
    j["targets"] = {{"quadform", theoretical_quadform},
                    {"variance", theoretical_variance},
                    {"std", theoretical_std}};
    j["summary"] = {
        {"excluded_trials", excluded_trials},
        {"error_trials", error_trials},
        {"upper", {{"mean", upper_summary.mean},
                   {"std", upper_summary.std_dev},
                   {"skewness", upper_summary.skewness},
                   {"excess_kurtosis", upper_summary.excess_kurtosis},
                   {"ks_statistic", upper_ks.statistic},
                   {"ks_p", upper_ks.p_value}}},
        {"lower", {{"mean", lower_summary.mean},
                   {"std", lower_summary.std_dev},
                   {"skewness", lower_summary.skewness},
                   {"excess_kurtosis", lower_summary.excess_kurtosis},
                   {"ks_statistic", lower_ks.statistic},
                   {"ks_p", lower_ks.p_value}}},
        {"symmetry_ks_p", symmetry_ks.p_value}};
    j["checks"] = {{"mean_pass", mean_pass()},
                   {"std_pass", std_pass()},
                   {"ks_pass", ks_pass()}};
    if (include_per_trial) {
      j["per_trial"] = {{"upper", upper_diffs}, {"lower", lower_diffs}};
    }
    return j;
  }

  static std::string csv_header() {
    return "experiment,object_law,n,a,epsilon,trials,excluded,upper_mean,"
           "upper_std,lower_mean,lower_std,theory_std,ks_p_upper,ks_p_lower";
  }
  std::string csv_line() const {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "endpoint_diff,%s,%zu,%g,%g,%zu,%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g",
                  to_string(spec.object_law), sample_size, ridge_a, epsilon, trials,
                  excluded_trials, upper_summary.mean, upper_summary.std_dev,
                  lower_summary.mean, lower_summary.std_dev, theoretical_std,
                  upper_ks.p_value, lower_ks.p_value);
    return buf;
  }
};

inline EndpointDiffReport endpoint_diff_experiment(const GenerativeSpec& spec,
                                                   std::size_t n, double a,
                                                   double epsilon,
                                                   std::size_t trials,
                                                   std::size_t threads = 0) {
  spec.validate();
  if (n < 3) throw DomainError("endpoint_diff_experiment: n must be >= 3");
  if (trials < 1) throw DomainError("endpoint_diff_experiment: trials must be >= 1");
  RidgeConfig cfg{a, spec.sigma, epsilon};
  cfg.validate();

  EndpointDiffReport report;
  report.spec = spec;
  report.sample_size = n;
  report.ridge_a = a;
  report.epsilon = epsilon;
  report.trials = trials;
  report.theoretical_quadform = quadform_for_law(spec);
  const VarianceResult var =
      theorem1_variance({epsilon, spec.sigma, report.theoretical_quadform});
  report.theoretical_variance = var.variance;
  report.theoretical_std = var.std_dev;

  enum : std::uint8_t { kOk, kExcluded, kError };
  std::vector<std::uint8_t> status(trials, kOk);
  std::vector<double> upper(trials, 0.0), lower(trials, 0.0);
  const double root_n = std::sqrt(static_cast<double>(n));

  detail::for_each_trial(trials, threads, [&](std::size_t t) {
    GenerativeSpec trial_spec = spec;
    trial_spec.seed = derive_stream_seed(spec.seed, t);
    try {
      const Dataset data = generate_dataset(trial_spec, n);
      const Dataset train = data.prefix(n - 1);
      const Vector& x = data.objects[n - 1];
      const PredictionInterval bayes = brr_predict(train, x, cfg);
      const RayPredictionSet up = upper_crr_predict(train, x, a, epsilon / 2.0);
      const RayPredictionSet lo = lower_crr_predict(train, x, a, epsilon / 2.0);
      if (up.direction == RayDirection::kFullLine ||
          lo.direction == RayDirection::kFullLine) {
        status[t] = kExcluded;
        return;
      }
      upper[t] = root_n * (bayes.upper - up.endpoint);
      lower[t] = root_n * (bayes.lower - lo.endpoint);
    } catch (const IrregularConfiguration&) {
      status[t] = kExcluded;
    } catch (const Error&) {
      status[t] = kError;
    }
  });

  for (std::size_t t = 0; t < trials; ++t) {
    switch (status[t]) {
      case kOk:
        report.upper_diffs.push_back(upper[t]);
        report.lower_diffs.push_back(lower[t]);
        break;
      case kExcluded: ++report.excluded_trials; break;
      default: ++report.error_trials; break;
    }
  }
  if (report.upper_diffs.size() < 8) {
    throw TooFewSamples("endpoint_diff_experiment: too few included trials");
  }
  report.upper_summary = summarize(report.upper_diffs);
  report.lower_summary = summarize(report.lower_diffs);
  const double sd = report.theoretical_std;
  const auto limit_cdf = [sd](double x) { return normal_cdf(x, sd); };
  report.upper_ks = ks_statistic(report.upper_diffs, limit_cdf);
  report.lower_ks = ks_statistic(report.lower_diffs, limit_cdf);
  report.symmetry_ks = ks_two_sample(report.upper_diffs, report.lower_diffs);
  return report;
}

}  // namespace crr
