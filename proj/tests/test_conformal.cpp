#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "crr/bayes.hpp"
#include "crr/conformal.hpp"
#include "helpers.hpp"

using crr::Dataset;
using crr::RayDirection;
using crr::Vector;

namespace {

// Objects pinned to zero force the ridge fit to zero, so the residuals are
// exactly the labels (any a > 0).
Dataset zero_object_dataset(std::initializer_list<double> labels) {
  Dataset d;
  for (double y : labels) d.append({0.0}, y);
  return d;
}

// t_i of the analytic route, recomputed directly from the leverage profile.
std::vector<double> transformed_residuals(const Dataset& train, const Vector& x,
                                          double a) {
  const auto prof =
      crr::leverage_profile(train.design_matrix(), train.labels, x, a);
  std::vector<double> t(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    t[i] = prof.prediction +
           (train.labels[i] - prof.train_predictions[i]) *
               (1.0 + prof.leverage) / (1.0 + prof.cross_leverages[i]);
  }
  return t;
}

}  // namespace

TEST_CASE("conformity scores by tail counts") {
  CHECK(crr::conformity_scores(zero_object_dataset({-1.0, 0.0, 2.0}), 1.0) ==
        std::vector<int>{1, 2, 1});
  CHECK(crr::conformity_scores(zero_object_dataset({0.0, 0.0}), 1.0) ==
        std::vector<int>{2, 2});
  CHECK(crr::conformity_scores(zero_object_dataset({5.0}), 1.0) ==
        std::vector<int>{1});
}

TEST_CASE("conformity scores stay in range on random instances") {
  crr::Rng rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng.next_u64() % 20;
    const Dataset seq = testutil::random_dataset(rng, n, 1 + rng.next_u64() % 2);
    for (int s : crr::conformity_scores(seq, 0.5)) {
      CHECK(s >= 1);
      CHECK(s <= static_cast<int>(n));
    }
  }
}

TEST_CASE("conservative p-value") {
  // Residuals (-1, 0, 2) with the test residual 2: scores (1,2,1), so
  // p = #{score <= 1} / 3.
  const Dataset train = zero_object_dataset({-1.0, 0.0});
  CHECK(crr::crr_pvalue(train, {0.0}, 2.0, 1.0) == Catch::Approx(2.0 / 3.0));

  CHECK(crr::crr_pvalue(Dataset{}, {0.0}, 5.0, 1.0) == 1.0);

  Dataset ties;
  ties.append({1.0}, 3.0);
  ties.append({1.0}, 3.0);
  CHECK(crr::crr_pvalue(ties, {1.0}, 3.0, 1.0) == 1.0);
}

TEST_CASE("p-values are multiples of 1/n") {
  crr::Rng rng(59);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.next_u64() % 15;
    const Dataset train = testutil::random_dataset(rng, n - 1, 1);
    const double p = crr::crr_pvalue(train, testutil::random_vector(rng, 1),
                                     rng.gaussian(), 0.5);
    const double scaled = p * static_cast<double>(n);
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("smoothed p-value") {
  const Dataset train = zero_object_dataset({-1.0, 0.0});
  CHECK(crr::smoothed_pvalue(train, {0.0}, 2.0, 1.0, 1.0) ==
        Catch::Approx(2.0 / 3.0));
  CHECK(crr::smoothed_pvalue(train, {0.0}, 2.0, 1.0, 0.0) == 0.0);

  const Dataset one = zero_object_dataset({0.0});
  CHECK(crr::smoothed_pvalue(one, {0.0}, 0.0, 1.0, 0.5) == 0.5);

  CHECK_THROWS_AS(crr::smoothed_pvalue(train, {0.0}, 2.0, 1.0, 1.5),
                  crr::DomainError);
}

TEST_CASE("grid predictor is everything below the p-value floor") {
  crr::Rng rng(61);
  const Dataset train = testutil::random_dataset(rng, 3, 1);
  // n = 4, so every p-value is at least 1/4 > epsilon = 0.2.
  const auto set = crr::crr_predict_grid(train, {0.3}, 1.0, 0.2,
                                         {-5.0, -1.0, 0.0, 2.0, 8.0});
  for (bool m : set.member) CHECK(m);
  REQUIRE(set.intervals().size() == 1);
}

TEST_CASE("grid predictor with a single training point") {
  // With two observations both conformity scores always tie, so every
  // candidate label is a member at any epsilon < 1.
  Dataset train;
  train.append({1.0}, 0.0);
  const auto set =
      crr::crr_predict_grid(train, {1.0}, 0.0, 0.9, {-3.0, -1.0, 0.0, 1.0, 3.0});
  for (bool m : set.member) CHECK(m);
}

TEST_CASE("grid predictor negation symmetry") {
  crr::Rng rng(67);
  const Dataset train = testutil::random_dataset(rng, 12, 2);
  const Vector x = testutil::random_vector(rng, 2);
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.37 * i);

  const auto set = crr::crr_predict_grid(train, x, 0.5, 0.25, grid);

  Dataset negated = train;
  for (double& y : negated.labels) y = -y;
  std::vector<double> neg_grid(grid.rbegin(), grid.rend());
  for (double& g : neg_grid) g = -g;
  const auto neg_set = crr::crr_predict_grid(negated, x, 0.5, 0.25, neg_grid);

  for (std::size_t j = 0; j < grid.size(); ++j) {
    CHECK(set.member[j] == neg_set.member[grid.size() - 1 - j]);
  }
}

TEST_CASE("grid validation") {
  Dataset train;
  train.append({1.0}, 0.0);
  CHECK_THROWS_AS(crr::crr_predict_grid(train, {1.0}, 0.0, 0.5, {}),
                  crr::DomainError);
  CHECK_THROWS_AS(crr::crr_predict_grid(train, {1.0}, 0.0, 0.5, {1.0, 1.0}),
                  crr::DomainError);
}

TEST_CASE("hat vectors from the 2x2 hat matrix") {
  Dataset train;
  train.append({1.0}, 0.0);
  const auto hat = crr::hat_matrix_ab(train, {1.0}, 0.0);
  REQUIRE(hat.a.size() == 2);
  CHECK(hat.a[0] == Catch::Approx(0.0).margin(1e-14));
  CHECK(hat.a[1] == Catch::Approx(0.0).margin(1e-14));
  CHECK(hat.b[0] == Catch::Approx(-0.5).margin(1e-14));
  CHECK(hat.b[1] == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("hat vector A vanishes for zero labels and B tends to e_n") {
  crr::Rng rng(71);
  Dataset train;
  for (int i = 0; i < 6; ++i) train.append(testutil::random_vector(rng, 2), 0.0);
  const Vector x = testutil::random_vector(rng, 2);
  const auto hat = crr::hat_matrix_ab(train, x, 0.3);
  for (double v : hat.a) CHECK(v == Catch::Approx(0.0).margin(1e-14));

  Dataset labelled = train;
  for (std::size_t i = 0; i < labelled.size(); ++i) labelled.labels[i] = 1.0 + double(i);
  const auto shrunk = crr::hat_matrix_ab(labelled, x, 1e12);
  for (std::size_t i = 0; i + 1 < shrunk.b.size(); ++i) {
    CHECK(shrunk.b[i] == Catch::Approx(0.0).margin(1e-10));
    CHECK(shrunk.a[i] == Catch::Approx(labelled.labels[i]).margin(1e-10));
  }
  CHECK(shrunk.b.back() == Catch::Approx(1.0).margin(1e-10));
  CHECK(shrunk.a.back() == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("closed-form hat vectors match the explicit hat matrix") {
  crr::Rng rng(73);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t p = 1 + rng.next_u64() % 3;
    const std::size_t n = p + 2 + rng.next_u64() % 12;
    const Dataset train = testutil::random_dataset(rng, n, p);
    const Vector x = testutil::random_vector(rng, p);
    const double a = (rep % 3 == 0) ? 0.0 : (rep % 3 == 1 ? 0.1 : 1.0);
    const auto oracle = crr::hat_matrix_ab(train, x, a);
    const auto fast = crr::hat_vectors_from_leverages(train, x, a);
    for (std::size_t i = 0; i < oracle.a.size(); ++i) {
      CHECK(fast.a[i] == Catch::Approx(oracle.a[i]).margin(1e-8));
      CHECK(fast.b[i] == Catch::Approx(oracle.b[i]).margin(1e-8));
    }
  }
}

TEST_CASE("regularity check examples") {
  Dataset one;
  one.append({1.0}, 0.4);
  CHECK(crr::regularity_check(one, {1.0}, 0.5));
  CHECK_FALSE(crr::regularity_check(one, {1.0}, 0.0));

  Dataset basis;
  basis.append({1.0, 0.0}, 0.0);
  basis.append({0.0, 1.0}, 0.0);
  CHECK(crr::regularity_check(basis, {0.5, 0.5}, 0.0));
}

TEST_CASE("regularity implies b_n dominates and positive adjusted denominators") {
  crr::Rng rng(79);
  for (int rep = 0; rep < 80; ++rep) {
    const std::size_t p = 1 + rng.next_u64() % 3;
    const std::size_t n = p + 1 + rng.next_u64() % 10;
    const Dataset train = testutil::random_dataset(rng, n, p);
    const Vector x = testutil::random_vector(rng, p);
    const double a = (rep % 2 == 0) ? 0.0 : 0.5;
    if (!crr::regularity_check(train, x, a)) continue;
    const auto hat = crr::hat_matrix_ab(train, x, a);
    const double bn = hat.b.back();
    for (std::size_t i = 0; i + 1 < hat.b.size(); ++i) {
      CHECK(bn > hat.b[i]);
    }
    const auto prof = crr::leverage_profile(train.design_matrix(), train.labels, x, a);
    for (double gi : prof.cross_leverages) CHECK(1.0 + gi > 0.0);
  }
}

TEST_CASE("upper ray on the toy instance") {
  Dataset train;
  train.append({1.0}, 0.0);
  const auto ray = crr::upper_crr_predict(train, {1.0}, 0.0, 0.5);
  REQUIRE(ray.direction == RayDirection::kLowerRay);
  CHECK(ray.endpoint == Catch::Approx(0.0).margin(1e-14));
  CHECK(ray.contains(-1.0));
  CHECK_FALSE(ray.contains(0.5));

  // Matches (a_i - a_n)/(b_n - b_i) from the hat-matrix oracle.
  const auto hat = crr::hat_matrix_ab(train, {1.0}, 0.0);
  CHECK(ray.endpoint ==
        Catch::Approx((hat.a[0] - hat.a[1]) / (hat.b[1] - hat.b[0])).margin(1e-12));
}

TEST_CASE("upper ray is the full line with too few observations") {
  Dataset train;
  train.append({1.0}, 0.0);
  const auto ray = crr::upper_crr_predict(train, {1.0}, 0.0, 0.05);  // k = 2 > 1
  CHECK(ray.direction == RayDirection::kFullLine);
  CHECK(ray.contains(1e12));
}

TEST_CASE("upper ray selects the k-th order statistic") {
  crr::Rng rng(83);
  Dataset train = testutil::random_dataset(rng, 99, 2);
  const Vector x = testutil::random_vector(rng, 2);
  const double a = 0.7;
  const auto ray = crr::upper_crr_predict(train, x, a, 0.05);  // k = ceil(0.95*100) = 95
  REQUIRE(ray.direction == RayDirection::kLowerRay);

  std::vector<double> t = transformed_residuals(train, x, a);
  std::sort(t.begin(), t.end());
  CHECK(ray.endpoint == t[94]);
}

TEST_CASE("lower ray mirrors the upper ray") {
  Dataset train;
  train.append({1.0}, 0.0);
  const auto ray = crr::lower_crr_predict(train, {1.0}, 0.0, 0.5);
  REQUIRE(ray.direction == RayDirection::kUpperRay);
  CHECK(ray.endpoint == Catch::Approx(0.0).margin(1e-14));
  CHECK(ray.contains(0.5));
  CHECK_FALSE(ray.contains(-0.5));

  CHECK(crr::lower_crr_predict(train, {1.0}, 0.0, 0.05).direction ==
        RayDirection::kFullLine);

  // Independent order-statistic check: the lower endpoint is the
  // (n-k)-th smallest transformed residual.
  crr::Rng rng(89);
  Dataset big = testutil::random_dataset(rng, 40, 2);
  const Vector x = testutil::random_vector(rng, 2);
  const auto low = crr::lower_crr_predict(big, x, 0.3, 0.1);  // n=41, k=37
  std::vector<double> t = transformed_residuals(big, x, 0.3);
  std::sort(t.begin(), t.end());
  CHECK(low.endpoint == Catch::Approx(t[41 - 37 - 1]).epsilon(1e-12));
}

TEST_CASE("irregular configurations are refused by the analytic route") {
  // x_test = -x_1 at a = 0 gives 1 + g_1 = 0: S_1 is not a proper ray.
  Dataset train;
  train.append({1.0}, 0.4);
  CHECK_THROWS_AS(crr::upper_crr_predict(train, {-1.0}, 0.0, 0.5),
                  crr::IrregularConfiguration);
  CHECK_FALSE(crr::regularity_check(train, {-1.0}, 0.0));

  // An irregular three-observation instance (so k <= n-1 and the rays are
  // actually attempted) through the grid fallback wrapper.
  Dataset three;
  three.append({1.0}, 0.4);
  three.append({0.1}, -0.2);
  CHECK_THROWS_AS(crr::crr_predict(three, {-2.0}, 0.0, 0.8),
                  crr::IrregularConfiguration);
  std::vector<double> grid;
  for (int i = -20; i <= 20; ++i) grid.push_back(0.1 * i);
  const auto fallback = crr::crr_predict_or_grid(three, {-2.0}, 0.0, 0.8, grid);
  CHECK(fallback.grid_fallback);
}

TEST_CASE("the exact ray condition is weaker than the diversity condition") {
  // x_1 = x_test = 1 at a = 0: the diversity matrix is [0], yet
  // b_n = 1/2 > b_1 = -1/2, so the ray is still valid and ends at 0.
  Dataset train;
  train.append({1.0}, 0.0);
  CHECK_FALSE(crr::regularity_check(train, {1.0}, 0.0));
  const auto ray = crr::upper_crr_predict(train, {1.0}, 0.0, 0.5);
  CHECK(ray.direction == RayDirection::kLowerRay);
  CHECK(ray.endpoint == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("two-sided interval on degenerate data") {
  // Identical observations: every transformed residual equals the common
  // label, so the interval collapses onto it.
  Dataset train;
  for (int i = 0; i < 3; ++i) train.append({1.0}, 0.0);
  const auto interval = crr::crr_predict(train, {1.0}, 0.0, 0.9);  // k = 3
  CHECK(interval.lower == Catch::Approx(0.0).margin(1e-14));
  CHECK(interval.upper == Catch::Approx(0.0).margin(1e-14));

  // One-sided rays at level >= 1/2 already pin the endpoint at 0 with a
  // single training observation.
  Dataset tiny;
  tiny.append({1.0}, 0.0);
  const auto up = crr::upper_crr_predict(tiny, {1.0}, 0.0, 0.5);
  const auto lo = crr::lower_crr_predict(tiny, {1.0}, 0.0, 0.5);
  CHECK(up.endpoint == Catch::Approx(0.0).margin(1e-14));
  CHECK(lo.endpoint == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("two-sided interval is the full line with two observations") {
  Dataset train;
  train.append({0.5}, 1.0);
  const auto interval = crr::crr_predict(train, {1.0}, 1.0, 0.1);
  CHECK(interval.is_full_line());
}

TEST_CASE("analytic interval agrees with the grid oracle") {
  crr::Rng rng(97);
  Dataset train = testutil::random_dataset(rng, 199, 2);
  const Vector x = testutil::random_vector(rng, 2);
  const double a = 1.0, epsilon = 0.1;
  const auto interval = crr::crr_predict(train, x, a, epsilon);
  REQUIRE(std::isfinite(interval.lower));
  REQUIRE(std::isfinite(interval.upper));

  const double step = (interval.upper - interval.lower) / 50.0;
  std::vector<double> grid;
  for (int i = -5; i <= 55; ++i) grid.push_back(interval.lower + step * i);
  const auto set = crr::crr_predict_grid(train, x, a, epsilon, grid);
  const auto runs = set.intervals();
  REQUIRE(runs.size() == 1);
  CHECK(std::abs(runs.front().first - interval.lower) <= step + 1e-9);
  CHECK(std::abs(runs.front().second - interval.upper) <= step + 1e-9);
}

TEST_CASE("analytic endpoints sit exactly on the p-value threshold") {
  // Just inside each endpoint the p-value exceeds epsilon, just outside it
  // does not: the analytic interval matches the set definition to 1e-9.
  crr::Rng rng(113);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 15 + rng.next_u64() % 25;
    const Dataset train = testutil::random_dataset(rng, n - 1, 2);
    const Vector x = testutil::random_vector(rng, 2);
    const double a = 0.5, epsilon = 0.2;
    const auto interval = crr::crr_predict(train, x, a, epsilon);
    if (!std::isfinite(interval.lower) || !std::isfinite(interval.upper)) continue;
    const double delta_hi = 1e-9 * std::max(1.0, std::abs(interval.upper));
    const double delta_lo = 1e-9 * std::max(1.0, std::abs(interval.lower));
    CHECK(crr::crr_pvalue(train, x, interval.upper - delta_hi, a) > epsilon);
    CHECK(crr::crr_pvalue(train, x, interval.upper + delta_hi, a) <= epsilon);
    CHECK(crr::crr_pvalue(train, x, interval.lower + delta_lo, a) > epsilon);
    CHECK(crr::crr_pvalue(train, x, interval.lower - delta_lo, a) <= epsilon);
  }
}

TEST_CASE("two-sided intervals are nested in epsilon and never empty") {
  crr::Rng rng(103);
  for (int rep = 0; rep < 30; ++rep) {
    Dataset train = testutil::random_dataset(rng, 25 + rng.next_u64() % 20, 2);
    const Vector x = testutil::random_vector(rng, 2);
    double prev_lo = -std::numeric_limits<double>::infinity();
    double prev_hi = std::numeric_limits<double>::infinity();
    for (double eps : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      const auto interval = crr::crr_predict(train, x, 0.5, eps);
      CHECK(interval.lower <= interval.upper);
      CHECK(interval.lower >= prev_lo);
      CHECK(interval.upper <= prev_hi);
      prev_lo = interval.lower;
      prev_hi = interval.upper;
    }
  }
}

TEST_CASE("label shift equivariance with an intercept column at a = 0") {
  crr::Rng rng(107);
  Dataset train;
  for (int i = 0; i < 30; ++i) {
    train.append({1.0, rng.gaussian()}, rng.gaussian());
  }
  const Vector x{1.0, 0.3};
  const double shift = 2.5;
  Dataset shifted = train;
  for (double& y : shifted.labels) y += shift;

  const auto base = crr::crr_predict(train, x, 0.0, 0.2);
  const auto moved = crr::crr_predict(shifted, x, 0.0, 0.2);
  CHECK(moved.lower == Catch::Approx(base.lower + shift).margin(1e-9));
  CHECK(moved.upper == Catch::Approx(base.upper + shift).margin(1e-9));

  const auto brr_base = crr::brr_predict(train, x, {0.0, 1.0, 0.2});
  const auto brr_moved = crr::brr_predict(shifted, x, {0.0, 1.0, 0.2});
  CHECK(brr_moved.lower == Catch::Approx(brr_base.lower + shift).margin(1e-9));
  CHECK(brr_moved.upper == Catch::Approx(brr_base.upper + shift).margin(1e-9));
}

TEST_CASE("online protocol on an IID stream") {
  crr::Rng rng(109);
  Dataset stream;
  const crr::Vector w{0.8, -0.4};
  for (int i = 0; i < 500; ++i) {
    const Vector x = testutil::random_vector(rng, 2);
    stream.append(x, crr::dot(w, x) + rng.gaussian());
  }
  const auto steps = crr::online_protocol(stream, 1.0, 0.2);
  REQUIRE(steps.size() == 499);

  std::size_t covered = 0, failed = 0;
  for (const auto& s : steps) {
    failed += s.failed;
    covered += (!s.failed && s.covered);
  }
  CHECK(failed == 0);
  const double coverage = static_cast<double>(covered) / steps.size();
  CHECK(coverage >= 0.8);

  // Uninformative start: with epsilon = 0.2 every step before the tenth
  // observation must be the full line, and the tenth must not be.
  for (const auto& s : steps) {
    if (s.step < 10) CHECK(s.interval.is_full_line());
  }
  CHECK_FALSE(steps[8].interval.is_full_line());  // step 10
}

TEST_CASE("online protocol degenerates on identical observations") {
  Dataset stream;
  for (int i = 0; i < 25; ++i) stream.append({1.0}, 3.0);
  const auto steps = crr::online_protocol(stream, 1.0, 0.3);
  const auto& last = steps.back();
  CHECK_FALSE(last.failed);
  CHECK(last.interval.lower == Catch::Approx(3.0).margin(1e-9));
  CHECK(last.interval.upper == Catch::Approx(3.0).margin(1e-9));
  CHECK(last.interval.width() <= 1e-9);

  Dataset too_short;
  too_short.append({1.0}, 0.0);
  CHECK_THROWS_AS(crr::online_protocol(too_short, 1.0, 0.3), crr::DomainError);
}
