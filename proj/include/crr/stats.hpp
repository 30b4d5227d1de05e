#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "crr/errors.hpp"

namespace crr {

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2),
/// truncated at 100 terms. Below the usual crossover the alternating
/// series converges too slowly and the theta-transformed form of the CDF
/// is used instead.
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    constexpr double pi = 3.14159265358979323846;
    const double t = std::exp(-pi * pi / (8.0 * lambda * lambda));
    double cdf = 0.0;
    for (int j = 1; j <= 7; j += 2) {  // exponents 1, 9, 25, 49
      cdf += std::pow(t, j * j);
    }
    cdf *= std::sqrt(2.0 * pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;  // sup |F_emp - F|
  double p_value = 1.0;    // asymptotic approximation
};

/// One-sample Kolmogorov-Smirnov test of samples against a CDF.
/// The p-value uses the asymptotic series with the usual finite-sample
/// rescaling of sqrt(N) D. Needs at least 8 samples.
template <class Cdf>
KsResult ks_statistic(const std::vector<double>& samples, Cdf&& cdf) {
  const std::size_t n = samples.size();
  if (n < 8) throw TooFewSamples("ks_statistic: need at least 8 samples");
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / dn,
                             static_cast<double>(i + 1) / dn - f));
  }
  const double root_n = std::sqrt(dn);
  const double lambda = (root_n + 0.12 + 0.11 / root_n) * d;
  return {d, kolmogorov_sf(lambda)};
}

/// Two-sample Kolmogorov-Smirnov test.
inline KsResult ks_two_sample(const std::vector<double>& first,
                              const std::vector<double>& second) {
  if (first.size() < 8 || second.size() < 8) {
    throw TooFewSamples("ks_two_sample: need at least 8 samples per side");
  }
  std::vector<double> a(first), b(second);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  return {d, kolmogorov_sf(lambda)};
}

struct MomentSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;          // unbiased (n-1 denominator)
  double skewness = 0.0;         // adjusted Fisher-Pearson; 0 when n < 3
  double excess_kurtosis = 0.0;  // bias-adjusted; 0 when n < 4
};

inline MomentSummary summarize(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw TooFewSamples("summarize: need at least 2 samples");
  const double dn = static_cast<double>(n);
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  MomentSummary s;
  s.count = n;
  s.mean = mean;
  s.std_dev = std::sqrt(m2 / (dn - 1.0));
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  if (n >= 3 && m2 > 0.0) {
    s.skewness = std::sqrt(dn * (dn - 1.0)) / (dn - 2.0) * m3 / std::pow(m2, 1.5);
  }
  if (n >= 4 && m2 > 0.0) {
    const double g2 = m4 / (m2 * m2) - 3.0;
    s.excess_kurtosis =
        (dn - 1.0) / ((dn - 2.0) * (dn - 3.0)) * ((dn + 1.0) * g2 + 6.0);
  }
  return s;
}

}  // namespace crr
