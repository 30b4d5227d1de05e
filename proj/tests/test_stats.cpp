#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crr/normal.hpp"
#include "crr/rng.hpp"
#include "crr/stats.hpp"
#include "helpers.hpp"

TEST_CASE("summarize basics") {
  const auto s = crr::summarize({-1.0, 1.0});
  CHECK(s.mean == 0.0);
  CHECK(s.std_dev == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));

  const auto c = crr::summarize({4.0, 4.0, 4.0, 4.0});
  CHECK(c.std_dev == 0.0);
  CHECK(c.skewness == 0.0);
  CHECK(c.excess_kurtosis == 0.0);

  CHECK_THROWS_AS(crr::summarize({1.0}), crr::TooFewSamples);
}

TEST_CASE("summarize on gaussian draws") {
  crr::Rng rng(211);
  std::vector<double> draws(100000);
  for (double& x : draws) x = rng.gaussian();
  const auto s = crr::summarize(draws);
  CHECK(std::abs(s.mean) < 0.02);
  CHECK(s.std_dev == Catch::Approx(1.0).margin(0.01));
  CHECK(std::abs(s.skewness) < 0.05);
  CHECK(std::abs(s.excess_kurtosis) < 0.1);
}

TEST_CASE("kolmogorov survival function") {
  CHECK(crr::kolmogorov_sf(1e-9) == 1.0);
  CHECK(crr::kolmogorov_sf(1.358) == Catch::Approx(0.05).margin(0.005));
  CHECK(crr::kolmogorov_sf(1.949) == Catch::Approx(0.001).margin(0.0005));
  double prev = 1.0;
  for (double lambda = 0.3; lambda < 3.0; lambda += 0.1) {
    const double q = crr::kolmogorov_sf(lambda);
    CHECK(q <= prev);
    prev = q;
  }
}

TEST_CASE("ks statistic on stratified quantiles") {
  const std::size_t n = 200;
  std::vector<double> samples(n);
  const auto cdf = [](double x) { return crr::normal_cdf(x); };
  for (std::size_t i = 0; i < n; ++i) {
    const double target = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    samples[i] = testutil::bisect_quantile(cdf, target);
  }
  const auto ks = crr::ks_statistic(samples, cdf);
  CHECK(ks.statistic <= 0.5 / static_cast<double>(n) + 1e-9);
  CHECK(ks.p_value > 0.999);
}

TEST_CASE("ks statistic on constant samples") {
  const std::vector<double> samples(50, 0.0);
  const auto ks =
      crr::ks_statistic(samples, [](double x) { return crr::normal_cdf(x); });
  CHECK(ks.statistic >= 0.5);
  CHECK(ks.p_value < 1e-6);
}

TEST_CASE("ks self-consistency on true draws") {
  crr::Rng rng(223);
  std::vector<double> draws(10000);
  for (double& x : draws) x = rng.gaussian();
  const auto ks =
      crr::ks_statistic(draws, [](double x) { return crr::normal_cdf(x); });
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("ks needs enough samples") {
  const std::vector<double> seven(7, 0.5);
  CHECK_THROWS_AS(crr::ks_statistic(seven, [](double) { return 0.5; }),
                  crr::TooFewSamples);
}

TEST_CASE("two-sample ks") {
  crr::Rng rng(227);
  std::vector<double> a(4000), b(4000), shifted(4000);
  for (double& x : a) x = rng.gaussian();
  for (double& x : b) x = rng.gaussian();
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = b[i] + 0.5;

  CHECK(crr::ks_two_sample(a, b).p_value > 0.01);
  CHECK(crr::ks_two_sample(a, shifted).p_value < 1e-6);
  CHECK_THROWS_AS(crr::ks_two_sample({1.0, 2.0}, a), crr::TooFewSamples);
}
