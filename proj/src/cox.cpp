#include "popadjust/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popadjust {

namespace {

constexpr double kSeparationBound = 30.0;
// Monotone likelihood lets the score shrink below tolerance while the estimate
// is still drifting outward; the giveaway is an information matrix collapsing
// toward zero, i.e. an absurd standard error.
constexpr double kFlatSeBound = 100.0;
constexpr int kMaxNewton = 50;
constexpr double kScoreTol = 1e-8;

std::size_t cox_dim(const ModelSpec& spec) {
  return spec.prognostic.size() + (spec.include_treatment ? 1 : 0) +
         spec.effect_modifiers.size();
}

void cox_row(const ModelSpec& spec, const Matrix& x, std::size_t i, double z, Vector& out) {
  out.resize(cox_dim(spec));
  std::size_t c = 0;
  for (std::size_t j : spec.prognostic) out[c++] = x(i, j);
  if (spec.include_treatment) out[c++] = z;
  for (std::size_t j : spec.effect_modifiers) out[c++] = z * x(i, j);
}

struct PartialDerivs {
  double loglik = 0.0;
  Vector score;
  Matrix info;
};

// One sweep over subjects in decreasing time order, accumulating the Breslow
// partial log-likelihood, score, and information at beta.
PartialDerivs partial_derivs(const Matrix& design, const Vector& time,
                             const std::vector<int>& event,
                             const std::vector<std::size_t>& order_desc, const Vector& beta) {
  const std::size_t n = design.rows();
  const std::size_t p = design.cols();
  PartialDerivs out;
  out.score.assign(p, 0.0);
  out.info = Matrix(p, p);

  Vector eta(n);
  for (std::size_t i = 0; i < n; ++i) eta[i] = dot(design.row(i), beta);

  double s0 = 0.0;
  Vector s1(p, 0.0);
  Matrix s2(p, p);

  std::size_t pos = 0;
  while (pos < n) {
    double t = time[order_desc[pos]];
    std::size_t start = pos;
    // everyone tied at this time enters the risk set first
    while (pos < n && time[order_desc[pos]] == t) {
      std::size_t i = order_desc[pos];
      double r = std::exp(eta[i]);
      const double* row = design.row_ptr(i);
      s0 += r;
      for (std::size_t a = 0; a < p; ++a) {
        s1[a] += r * row[a];
        for (std::size_t b = a; b < p; ++b) s2(a, b) += r * row[a] * row[b];
      }
      ++pos;
    }
    double d = 0.0;
    for (std::size_t q = start; q < pos; ++q) {
      std::size_t i = order_desc[q];
      if (event[i] != 1) continue;
      d += 1.0;
      out.loglik += eta[i];
      const double* row = design.row_ptr(i);
      for (std::size_t a = 0; a < p; ++a) out.score[a] += row[a];
    }
    if (d > 0.0) {
      out.loglik -= d * std::log(s0);
      for (std::size_t a = 0; a < p; ++a) {
        double m1a = s1[a] / s0;
        out.score[a] -= d * m1a;
        for (std::size_t b = a; b < p; ++b)
          out.info(a, b) += d * (s2(a, b) / s0 - m1a * (s1[b] / s0));
      }
    }
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < a; ++b) out.info(a, b) = out.info(b, a);
  return out;
}

}  // namespace

double CoxFit::treatment_coef() const {
  if (!has_treatment) throw ConfigError("CoxFit: model has no treatment term");
  return coef[n_prognostic];
}

double CoxFit::treatment_var() const {
  if (!has_treatment) throw ConfigError("CoxFit: model has no treatment term");
  return vcov(n_prognostic, n_prognostic);
}

CoxFit fit_cox(const ModelSpec& spec, const SurvivalData& data) {
  data.validate();
  spec.validate(data.k());
  const std::size_t n = data.n();
  const std::size_t p = cox_dim(spec);
  if (p == 0) throw ConfigError("fit_cox: model has no terms");

  Matrix design(n, p);
  Vector row;
  for (std::size_t i = 0; i < n; ++i) {
    cox_row(spec, data.x, i, static_cast<double>(data.treatment[i]), row);
    for (std::size_t j = 0; j < p; ++j) design(i, j) = row[j];
  }

  std::vector<std::size_t> order_desc(n);
  std::iota(order_desc.begin(), order_desc.end(), 0);
  std::sort(order_desc.begin(), order_desc.end(),
            [&](std::size_t a, std::size_t b) { return data.time[a] > data.time[b]; });

  Vector beta(p, 0.0);
  PartialDerivs d = partial_derivs(design, data.time, data.event, order_desc, beta);

  double n_events_d = 0.0;
  for (int e : data.event) n_events_d += e == 1 ? 1.0 : 0.0;
  // the score is a sum over events, so its floating-point floor scales with
  // the event count; same for the achievable log-likelihood resolution
  const double score_tol = kScoreTol * std::max(1.0, n_events_d);

  CoxFit fit;
  for (int iter = 0; iter < kMaxNewton; ++iter) {
    if (norm_inf(d.score) <= score_tol) {
      fit.converged = true;
      fit.iterations = iter;
      break;
    }
    Vector step;
    try {
      step = spd_solve(d.info, d.score);
    } catch (const NotPosDefError&) {
      if (iter == 0) throw RankError("fit_cox: information matrix singular (constant covariate?)");
      throw SeparationError("fit_cox: information matrix collapsed");
    }
    double scale = 1.0;
    for (int h = 0; h < 30; ++h) {
      Vector cand = beta + scale * step;
      PartialDerivs dc = partial_derivs(design, data.time, data.event, order_desc, cand);
      if (std::isfinite(dc.loglik) &&
          dc.loglik >= d.loglik - 1e-10 * (1.0 + std::fabs(d.loglik))) {
        beta = std::move(cand);
        d = std::move(dc);
        break;
      }
      scale *= 0.5;
      if (h == 29) throw NumericalFailure("fit_cox: step halving failed");
    }
    if (norm_inf(beta) > kSeparationBound)
      throw SeparationError("fit_cox: coefficients diverging (monotone likelihood)");
  }
  if (!fit.converged)
    throw SeparationError("fit_cox: Newton iterations did not converge");

  fit.coef = beta;
  fit.vcov = spd_inverse(d.info);
  for (std::size_t j = 0; j < p; ++j)
    if (!(fit.vcov(j, j) < kFlatSeBound * kFlatSeBound))
      throw SeparationError("fit_cox: flat partial likelihood (monotone ordering?)");
  fit.n = n;
  fit.n_prognostic = spec.prognostic.size();
  fit.n_interactions = spec.effect_modifiers.size();
  fit.has_treatment = spec.include_treatment;

  // Breslow baseline: one ascending pass, reusing risk sums from a
  // descending sweep stored per distinct event time.
  Vector eta(n);
  for (std::size_t i = 0; i < n; ++i) eta[i] = dot(design.row(i), beta);
  std::vector<std::pair<double, double>> increments;  // (event time, d/S0)
  double s0 = 0.0;
  std::size_t pos = 0;
  while (pos < n) {
    double t = data.time[order_desc[pos]];
    double d_t = 0.0;
    while (pos < n && data.time[order_desc[pos]] == t) {
      std::size_t i = order_desc[pos];
      s0 += std::exp(eta[i]);
      if (data.event[i] == 1) d_t += 1.0;
      ++pos;
    }
    if (d_t > 0.0) increments.emplace_back(t, d_t / s0);
  }
  std::reverse(increments.begin(), increments.end());
  double h = 0.0;
  for (auto& [t, inc] : increments) {
    h += inc;
    fit.cumhaz.emplace_back(t, h);
  }
  for (int e : data.event) fit.n_events += e == 1 ? 1u : 0u;
  return fit;
}

double baseline_cumhaz(const CoxFit& fit, double t) {
  if (fit.cumhaz.empty()) throw ConfigError("baseline_cumhaz: no events in fit");
  if (t > fit.cumhaz.back().first)
    throw ExtrapolationError("baseline_cumhaz: t beyond the last observed event time");
  double h = 0.0;
  for (const auto& [time, value] : fit.cumhaz) {
    if (time <= t)
      h = value;
    else
      break;
  }
  return h;
}

double marginal_survival(const CoxFit& fit, const ModelSpec& spec, const Matrix& x_star,
                         int set_treatment, double t) {
  spec.validate(x_star.cols());
  if (cox_dim(spec) != fit.coef.size())
    throw ShapeError("marginal_survival: fit and spec dimensions disagree");
  if (x_star.rows() == 0) throw ShapeError("marginal_survival: empty target population");
  if (set_treatment != 0 && set_treatment != 1)
    throw ValueError("marginal_survival: treatment must be 0 or 1");
  double h = baseline_cumhaz(fit, t);
  Vector row;
  double acc = 0.0;
  for (std::size_t i = 0; i < x_star.rows(); ++i) {
    cox_row(spec, x_star, i, static_cast<double>(set_treatment), row);
    acc += std::exp(-h * std::exp(dot(row, fit.coef)));
  }
  return acc / static_cast<double>(x_star.rows());
}

double marginal_log_hr(const CoxFit& fit, const ModelSpec& spec, const Matrix& x_star, double t) {
  double s1 = marginal_survival(fit, spec, x_star, 1, t);
  double s0 = marginal_survival(fit, spec, x_star, 0, t);
  if (!(s1 < 1.0) || !(s0 < 1.0) || !(s1 > 0.0) || !(s0 > 0.0))
    throw UndefinedAtTimeError("marginal_log_hr: survival at 1 (or 0) leaves the contrast undefined");
  return std::log(-std::log(s1)) - std::log(-std::log(s0));
}

std::vector<std::pair<double, double>> marginal_log_hr_curve(const CoxFit& fit,
                                                             const ModelSpec& spec,
                                                             const Matrix& x_star,
                                                             const Vector& grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double t : grid) out.emplace_back(t, marginal_log_hr(fit, spec, x_star, t));
  return out;
}

Vector default_time_grid(const CoxFit& fit) {
  Vector times;
  times.reserve(fit.cumhaz.size());
  for (const auto& [t, h] : fit.cumhaz) times.push_back(t);
  Vector grid;
  for (int q = 1; q <= 10; ++q) {
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(q / 10.0 * static_cast<double>(times.size()))) - 1;
    double t = times[std::min(idx, times.size() - 1)];
    if (grid.empty() || t > grid.back()) grid.push_back(t);
  }
  return grid;
}

}  // namespace popadjust
