#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "popadjust/cox.hpp"
#include "popadjust/distributions.hpp"

using namespace popadjust;

namespace {

// Naive O(n^2) Breslow partial log-likelihood, independent of the library's
// single-sweep implementation.
double naive_partial_loglik(const SurvivalData& d, const ModelSpec& spec, const Vector& beta) {
  auto lp = [&](std::size_t i) {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t j : spec.prognostic) s += beta[c++] * d.x(i, j);
    if (spec.include_treatment) s += beta[c++] * d.treatment[i];
    for (std::size_t j : spec.effect_modifiers) s += beta[c++] * d.treatment[i] * d.x(i, j);
    return s;
  };
  double ll = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.event[i] != 1) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < d.n(); ++j)
      if (d.time[j] >= d.time[i]) denom += std::exp(lp(j));
    ll += lp(i) - std::log(denom);
  }
  return ll;
}

SurvivalData two_arm_exponential(std::size_t n_per_arm, double rate0, double rate1,
                                 RngStream& rng) {
  SurvivalData d;
  d.x = Matrix(2 * n_per_arm, 0);
  for (std::size_t i = 0; i < 2 * n_per_arm; ++i) {
    int z = i < n_per_arm ? 1 : 0;
    double u = rng.uniform();
    d.treatment.push_back(z);
    d.time.push_back(-std::log(u) / (z == 1 ? rate1 : rate0));
    d.event.push_back(1);
  }
  return d;
}

}  // namespace

TEST_CASE("exponential data with hazard ratio 2 recovers log 2") {
  RngStream rng(20240811, 4);
  SurvivalData d = two_arm_exponential(5000, 1.0, 2.0, rng);
  ModelSpec spec;  // treatment only
  CoxFit fit = fit_cox(spec, d);
  CHECK(fit.converged);
  double se = std::sqrt(fit.treatment_var());
  CHECK(std::fabs(fit.treatment_coef() - std::log(2.0)) <= 3.0 * se);

  // closed-form exponential MLE oracle: log of the rate ratio
  double t1 = 0.0, t0 = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i)
    (d.treatment[i] == 1 ? t1 : t0) += d.time[i];
  double mle = std::log((5000.0 / t1) / (5000.0 / t0));
  CHECK(fit.treatment_coef() == doctest::Approx(mle).epsilon(0.05));
}

TEST_CASE("fitted coefficients maximize the naive partial likelihood") {
  RngStream rng(20240811, 5);
  const std::size_t n = 300;
  SurvivalData d;
  d.x = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) = sample_normal(rng);
    d.x(i, 1) = sample_normal(rng);
    int z = i % 2 == 0 ? 1 : 0;
    d.treatment.push_back(z);
    double rate = std::exp(0.5 * d.x(i, 0) - 0.3 * d.x(i, 1) + 0.7 * z);
    d.time.push_back(-std::log(rng.uniform()) / rate);
    d.event.push_back(rng.uniform() < 0.8 ? 1 : 0);  // ~20% random censoring
  }
  ModelSpec spec;
  spec.prognostic = {0, 1};
  CoxFit fit = fit_cox(spec, d);
  CHECK(fit.converged);

  auto ll = [&](const std::vector<double>& b) { return naive_partial_loglik(d, spec, b); };
  auto grad = oracles::fd_gradient(ll, fit.coef, 1e-5);
  for (double gj : grad) CHECK(std::fabs(gj) <= 1e-3);
  double at_fit = ll(fit.coef);
  for (std::size_t j = 0; j < fit.coef.size(); ++j) {
    Vector bump = fit.coef;
    bump[j] += 0.05;
    CHECK(at_fit >= ll(bump));
    bump[j] -= 0.10;
    CHECK(at_fit >= ll(bump));
  }
}

TEST_CASE("hand-built fit reproduces the average-survival arithmetic") {
  CoxFit fit;
  fit.coef = {std::log(2.0)};
  fit.vcov = Matrix(1, 1, 0.01);
  fit.cumhaz = {{1.0, 0.5}};
  fit.converged = true;
  fit.n_prognostic = 1;
  fit.has_treatment = false;

  ModelSpec spec;
  spec.prognostic = {0};
  spec.include_treatment = false;

  Matrix x_star(2, 1);
  x_star(0, 0) = 0.0;
  x_star(1, 0) = 1.0;  // lp = {0, log 2}
  double s = marginal_survival(fit, spec, x_star, 0, 1.0);
  double expected = 0.5 * (std::exp(-0.5) + std::exp(-1.0));
  CHECK(s == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("marginal log hazard ratio from survival pair: exp(-1) vs exp(-2)") {
  // log(-log S1) - log(-log S0) with S1 = e^-1, S0 = e^-2 gives -log 2.
  CoxFit fit;
  fit.coef = {std::log(0.5)};  // z halves the hazard
  fit.vcov = Matrix(1, 1, 0.01);
  fit.cumhaz = {{1.0, 2.0}};
  fit.converged = true;
  fit.has_treatment = true;

  ModelSpec spec;  // treatment only
  Matrix x_star(3, 0);
  double v = marginal_log_hr(fit, spec, x_star, 1.0);
  // S1 = exp(-2 * 0.5) = e^-1, S0 = e^-2
  CHECK(v == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("no covariates collapses the marginal log HR onto the coefficient") {
  RngStream rng(20240811, 6);
  SurvivalData d = two_arm_exponential(400, 1.0, 1.7, rng);
  ModelSpec spec;
  CoxFit fit = fit_cox(spec, d);
  Matrix x_star(5, 0);
  for (double t : default_time_grid(fit)) {
    double v = marginal_log_hr(fit, spec, x_star, t);
    CHECK(v == doctest::Approx(fit.treatment_coef()).scale(1).epsilon(1e-10));
  }
}

TEST_CASE("breslow cumulative hazard on a tied hand example") {
  // symmetric arms force beta = 0; risk sets of 6 then 4 with 2 events each
  SurvivalData d;
  d.x = Matrix(6, 0);
  d.treatment = {1, 0, 1, 0, 1, 0};
  d.time = {1, 1, 2, 2, 3, 3};
  d.event = {1, 1, 1, 1, 0, 0};
  ModelSpec spec;
  CoxFit fit = fit_cox(spec, d);
  CHECK(std::fabs(fit.treatment_coef()) <= 1e-8);
  CHECK(baseline_cumhaz(fit, 1.0) == doctest::Approx(2.0 / 6.0).epsilon(1e-10));
  CHECK(baseline_cumhaz(fit, 1.99) == doctest::Approx(2.0 / 6.0).epsilon(1e-10));
  CHECK(baseline_cumhaz(fit, 2.0) == doctest::Approx(2.0 / 6.0 + 2.0 / 4.0).epsilon(1e-10));
  CHECK(baseline_cumhaz(fit, 0.5) == 0.0);
  CHECK_THROWS_AS(baseline_cumhaz(fit, 2.5), ExtrapolationError);
}

TEST_CASE("survival of 1 before the first event leaves the contrast undefined") {
  RngStream rng(20240811, 7);
  SurvivalData d = two_arm_exponential(100, 1.0, 2.0, rng);
  ModelSpec spec;
  CoxFit fit = fit_cox(spec, d);
  Matrix x_star(3, 0);
  double first_event = fit.cumhaz.front().first;
  CHECK(marginal_survival(fit, spec, x_star, 1, first_event * 0.5) == 1.0);
  CHECK_THROWS_AS(marginal_log_hr(fit, spec, x_star, first_event * 0.5), UndefinedAtTimeError);
}

TEST_CASE("constant covariate raises RankError") {
  RngStream rng(20240811, 8);
  SurvivalData d = two_arm_exponential(50, 1.0, 2.0, rng);
  d.x = Matrix(d.n(), 1, 1.0);
  ModelSpec spec;
  spec.prognostic = {0};
  CHECK_THROWS_AS(fit_cox(spec, d), RankError);
}

TEST_CASE("perfectly separated risk ordering raises SeparationError") {
  SurvivalData d;
  const std::size_t n = 40;
  d.x = Matrix(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int z = i < n / 2 ? 1 : 0;
    d.treatment.push_back(z);
    d.time.push_back(z == 1 ? 1.0 + i : 100.0 + i);  // every treated event first
    d.event.push_back(1);
  }
  ModelSpec spec;
  CHECK_THROWS_AS(fit_cox(spec, d), SeparationError);
}

TEST_CASE("default grid spans event-time deciles") {
  RngStream rng(20240811, 9);
  SurvivalData d = two_arm_exponential(200, 1.0, 2.0, rng);
  ModelSpec spec;
  CoxFit fit = fit_cox(spec, d);
  Vector grid = default_time_grid(fit);
  CHECK(grid.size() >= 5);
  CHECK(grid.size() <= 10);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  CHECK(grid.back() == fit.cumhaz.back().first);
}

TEST_CASE("survival data validation") {
  SurvivalData d;
  d.x = Matrix(2, 0);
  d.treatment = {1, 0};
  d.time = {1.0, 2.0};
  d.event = {0, 0};
  CHECK_THROWS_AS(d.validate(), ValueError);  // no events
  d.event = {1, 1};
  d.time = {0.0, 2.0};
  CHECK_THROWS_AS(d.validate(), ValueError);  // nonpositive time
}
