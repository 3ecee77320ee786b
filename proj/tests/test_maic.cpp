#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "popadjust/distributions.hpp"
#include "popadjust/maic.hpp"

using namespace popadjust;

namespace {

Vector weighted_col_mean(const Matrix& x, const Vector& w) {
  Vector m(x.cols(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    total += w[i];
    for (std::size_t j = 0; j < x.cols(); ++j) m[j] += w[i] * x(i, j);
  }
  for (double& v : m) v /= total;
  return m;
}

}  // namespace

TEST_CASE("already-matched data needs no reweighting") {
  const std::size_t n = 40;
  Matrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = (i % 2 == 0) ? -1.0 : 1.0;
  WeightFit fit = estimate_weights(x, {0.0});
  CHECK(std::fabs(fit.alpha[0]) <= 1e-10);
  for (double w : fit.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.ess == doctest::Approx(static_cast<double>(n)).epsilon(1e-10));
}

TEST_CASE("half-and-half binary modifier matched to 0.75") {
  const std::size_t n = 100;
  Matrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = i < n / 2 ? 0.0 : 1.0;
  WeightFit fit = estimate_weights(x, {0.75});
  // solving (1-theta) e^{-0.75 a} weight balance gives alpha = log 3
  CHECK(fit.alpha[0] == doctest::Approx(std::log(3.0)).epsilon(1e-8));
  CHECK(fit.weights[n - 1] / fit.weights[0] == doctest::Approx(3.0).epsilon(1e-8));
  Vector wm = weighted_col_mean(x, fit.weights);
  CHECK(std::fabs(wm[0] - 0.75) <= 1e-6);
  CHECK(fit.ess == doctest::Approx(80.0).epsilon(1e-8));  // (a+b)^2/(a^2+b^2) * n/2
}

TEST_CASE("target outside the observed support is infeasible") {
  Matrix x(20, 1);
  for (std::size_t i = 0; i < 20; ++i) x(i, 0) = static_cast<double>(i) / 20.0;  // < 1
  CHECK_THROWS_AS(estimate_weights(x, {1.5}), NoFeasibleWeights);
  CHECK_THROWS_AS(estimate_weights(x, {-0.1}), NoFeasibleWeights);
}

TEST_CASE("balancing holds across correlated modifiers and interior targets") {
  RngStream rng(321, 1);
  const std::size_t n = 500;
  Matrix x(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    double a = sample_normal(rng);
    x(i, 0) = a;
    x(i, 1) = 0.5 * a + 0.8 * sample_normal(rng);
  }
  for (Vector theta : {Vector{0.3, -0.2}, Vector{0.0, 0.4}, Vector{-0.5, 0.1}}) {
    WeightFit fit = estimate_weights(x, theta);
    Vector wm = weighted_col_mean(x, fit.weights);
    CHECK(std::fabs(wm[0] - theta[0]) <= 1e-6);
    CHECK(std::fabs(wm[1] - theta[1]) <= 1e-6);
    CHECK(fit.ess <= static_cast<double>(n));
    CHECK(fit.ess < static_cast<double>(n));  // nontrivial reweighting
    for (double w : fit.weights) CHECK(w > 0.0);
  }
}

TEST_CASE("weights are invariant to a matched location shift") {
  RngStream rng(321, 2);
  const std::size_t n = 200;
  Matrix x(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = sample_normal(rng);
    x(i, 1) = sample_normal(rng) * 2.0;
  }
  Vector theta{0.2, -0.3};
  WeightFit base = estimate_weights(x, theta);

  Matrix shifted = x;
  for (std::size_t i = 0; i < n; ++i) shifted(i, 0) += 17.5;
  WeightFit moved = estimate_weights(shifted, {theta[0] + 17.5, theta[1]});
  for (std::size_t i = 0; i < n; ++i)
    CHECK(moved.weights[i] == doctest::Approx(base.weights[i]).epsilon(1e-9));
}

TEST_CASE("bootstrap comparison recovers a null effect on matched data") {
  RngStream rng(321, 3);
  const std::size_t n = 2000;
  IpdDataset ipd;
  ipd.x = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    ipd.x(i, 0) = 0.6 + 0.4 * sample_normal(rng);
    ipd.x(i, 1) = 0.6 + 0.4 * sample_normal(rng);
    ipd.treatment.push_back(i < 2 * n / 3 ? 1 : 0);
    ipd.y.push_back(sample_bernoulli(rng, 0.35) ? 1.0 : 0.0);
  }
  AggregateData ald;
  ald.means = {0.6, 0.6};
  ald.sds = {0.4, 0.4};
  ald.effect_modifier = {true, true};
  ald.y_b = 50;
  ald.n_b = 200;
  ald.y_c = 70;
  ald.n_c = 200;

  MaicOptions opt;
  opt.boot_b = 200;
  RngStream est_rng(321, 4);
  EffectEstimate est = maic_estimate(ipd, ald, opt, est_rng);
  CHECK(std::fabs(est.point) <= 3.0 * std::sqrt(est.variance));
  CHECK(est.estimand == Estimand::marginal);
  CHECK(est.scale == EffectScale::log_odds_ratio);
  CHECK(est.comparison == Comparison::a_vs_c);
  CHECK(est.failed_resamples == 0);
  CHECK(est.total_resamples == 200);
  CHECK(est.ci_lower < est.point);
  CHECK(est.ci_upper > est.point);
}

TEST_CASE("bootstrap runs are reproducible for a fixed stream") {
  RngStream rng(321, 5);
  const std::size_t n = 60;
  IpdDataset ipd;
  ipd.x = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    ipd.x(i, 0) = sample_normal(rng);
    ipd.treatment.push_back(i % 2 == 0 ? 1 : 0);
    ipd.y.push_back((i / 2) % 2 == 0 ? 1.0 : 0.0);
  }
  AggregateData ald;
  ald.means = {0.1};
  ald.sds = {1.0};
  ald.effect_modifier = {true};
  ald.y_b = 10;
  ald.n_b = 50;
  ald.y_c = 20;
  ald.n_c = 50;

  MaicOptions opt;
  opt.boot_b = 2;
  RngStream r1(900, 1), r2(900, 1);
  EffectEstimate a = maic_estimate(ipd, ald, opt, r1);
  EffectEstimate b = maic_estimate(ipd, ald, opt, r2);
  CHECK(a.point == b.point);
  CHECK(a.variance == b.variance);
}

TEST_CASE("failed resamples are capped then dropped") {
  // two rare positive rows: resamples that miss both cannot reach the target
  const std::size_t n = 16;
  IpdDataset ipd;
  ipd.x = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    ipd.x(i, 0) = i < 2 ? 1.0 : 0.0;
    ipd.treatment.push_back(i % 2 == 0 ? 1 : 0);
    ipd.y.push_back((i / 2) % 2 == 0 ? 1.0 : 0.0);
  }
  AggregateData ald;
  ald.means = {0.4};
  ald.sds = {0.5};
  ald.effect_modifier = {true};
  ald.y_b = 10;
  ald.n_b = 50;
  ald.y_c = 20;
  ald.n_c = 50;

  MaicOptions strict;
  strict.boot_b = 100;
  RngStream r1(900, 2);
  CHECK_THROWS_AS(maic_estimate(ipd, ald, strict, r1), EstimationFailed);

  MaicOptions loose;
  loose.boot_b = 100;
  loose.failure_cap = 0.9;
  RngStream r2(900, 2);
  EffectEstimate est = maic_estimate(ipd, ald, loose, r2);
  CHECK(est.failed_resamples > 0);
  CHECK(est.failed_resamples < 90);
  CHECK(std::isfinite(est.point));
  CHECK(est.variance > 0.0);
}

TEST_CASE("input validation") {
  Matrix x(5, 1);
  CHECK_THROWS_AS(estimate_weights(x, {0.0, 1.0}), ShapeError);
  Matrix empty(0, 1);
  CHECK_THROWS_AS(estimate_weights(empty, {0.0}), ConfigError);
  Matrix nocol(5, 0);
  CHECK_THROWS_AS(estimate_weights(nocol, {}), ConfigError);
}
