#include "popadjust/maic.hpp"

#include <cmath>
#include <limits>

#include "popadjust/errors.hpp"
#include "popadjust/glm.hpp"
#include "popadjust/optimize.hpp"

namespace popadjust {

namespace {

constexpr double kBalanceTol = 1e-6;
constexpr double kAlphaBound = 200.0;

// weighted EM means minus the target, the moment condition driven to zero
Vector balance_gap(const Matrix& centered, const Vector& w) {
  const std::size_t p = centered.cols();
  Vector gap(p, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < centered.rows(); ++i) {
    total += w[i];
    for (std::size_t j = 0; j < p; ++j) gap[j] += w[i] * centered(i, j);
  }
  for (double& g : gap) g /= total;
  return gap;
}

}  // namespace

WeightFit estimate_weights(const Matrix& x_em, const Vector& theta_em) {
  const std::size_t n = x_em.rows();
  const std::size_t p = x_em.cols();
  if (p == 0) throw ConfigError("estimate_weights: no effect modifiers");
  if (n == 0) throw ConfigError("estimate_weights: empty dataset");
  if (theta_em.size() != p)
    throw ShapeError("estimate_weights: target length does not match columns");

  Matrix centered(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) centered(i, j) = x_em(i, j) - theta_em[j];

  // a reweighted mean can only reach targets inside the per-component range
  for (std::size_t j = 0; j < p; ++j) {
    double lo = centered(0, j), hi = centered(0, j);
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, centered(i, j));
      hi = std::max(hi, centered(i, j));
    }
    if (lo > 0.0 || hi < 0.0)
      throw NoFeasibleWeights("estimate_weights: target outside the observed range");
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  auto objective = [&](const Vector& a) {
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double t = dot(centered.row(i), a);
      if (t > 700.0) return std::numeric_limits<double>::infinity();
      q += std::exp(t);
    }
    return q * inv_n;
  };
  auto gradient = [&](const Vector& a) {
    Vector g(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double w = std::exp(std::min(dot(centered.row(i), a), 700.0));
      for (std::size_t j = 0; j < p; ++j) g[j] += w * centered(i, j);
    }
    for (double& v : g) v *= inv_n;
    return g;
  };

  Vector alpha(p, 0.0);
  try {
    ArgminResult res = bfgs_minimize(objective, gradient, alpha, 1e-8, 500);
    alpha = res.argmin;
  } catch (const NumericalFailure&) {
    throw NoFeasibleWeights("estimate_weights: objective unbounded along search path");
  }
  if (norm_inf(alpha) > kAlphaBound)
    throw NoFeasibleWeights("estimate_weights: weight coefficients diverging");

  // Newton polish on the moment condition, using the convex objective's
  // exact Hessian, to push balancing below tolerance.
  for (int it = 0; it < 50; ++it) {
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = std::exp(std::min(dot(centered.row(i), alpha), 700.0));
    Vector g(p, 0.0);
    Matrix h(p, p);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = centered.row_ptr(i);
      for (std::size_t a = 0; a < p; ++a) {
        g[a] += w[i] * row[a];
        for (std::size_t b = a; b < p; ++b) h(a, b) += w[i] * row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) h(a, b) = h(b, a);
    if (norm_inf(g) <= 1e-12 * static_cast<double>(n)) break;
    Vector step;
    try {
      step = spd_solve(h, g);
    } catch (const NotPosDefError&) {
      break;  // degenerate curvature: fall through to the balance check
    }
    for (std::size_t j = 0; j < p; ++j) alpha[j] -= step[j];
    if (norm_inf(alpha) > kAlphaBound)
      throw NoFeasibleWeights("estimate_weights: weight coefficients diverging");
  }

  WeightFit fit;
  fit.alpha = alpha;
  fit.weights.resize(n);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = std::exp(dot(centered.row(i), alpha));
    fit.weights[i] = w;
    sum += w;
    sumsq += w * w;
  }
  fit.ess = sum * sum / sumsq;

  Vector gap = balance_gap(centered, fit.weights);
  if (norm_inf(gap) > kBalanceTol)
    throw NoFeasibleWeights("estimate_weights: could not balance to tolerance");
  return fit;
}

EffectEstimate maic_estimate(const IpdDataset& ipd, const AggregateData& ald,
                             const MaicOptions& opt, RngStream& rng) {
  ipd.validate();
  ald.validate();
  if (ald.means.size() != ipd.k())
    throw ShapeError("maic_estimate: aggregate covariate count does not match IPD");
  if (opt.boot_b < 2) throw ConfigError("maic_estimate: need at least 2 resamples");
  std::vector<std::size_t> em = ald.em_indices();
  if (em.empty()) throw ConfigError("maic_estimate: no effect modifiers flagged");

  const std::size_t n = ipd.n();
  Vector theta(em.size());
  for (std::size_t j = 0; j < em.size(); ++j) theta[j] = ald.means[em[j]];

  ModelSpec outcome;  // weighted y ~ z
  outcome.link = Link::logit;
  outcome.include_treatment = true;

  Vector estimates;
  estimates.reserve(opt.boot_b);
  std::size_t failed = 0;
  Matrix x_em(n, em.size());
  IpdDataset sample;
  sample.x = Matrix(n, 0);
  sample.treatment.resize(n);
  sample.y.resize(n);

  for (std::size_t b = 0; b < opt.boot_b; ++b) {
    RngStream sub = rng.fork(b);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = sub.uniform_index(n);
      for (std::size_t j = 0; j < em.size(); ++j) x_em(i, j) = ipd.x(r, em[j]);
      sample.treatment[i] = ipd.treatment[r];
      sample.y[i] = ipd.y[r];
    }
    try {
      WeightFit wf = estimate_weights(x_em, theta);
      GlmFit fit = fit_glm(outcome, sample, &wf.weights);
      estimates.push_back(fit.treatment_coef());
    } catch (const NoFeasibleWeights&) {
      ++failed;
    } catch (const SeparationError&) {
      ++failed;
    }
  }

  double frac = static_cast<double>(failed) / static_cast<double>(opt.boot_b);
  if (frac > opt.failure_cap || estimates.size() < 2)
    throw EstimationFailed("maic_estimate: " + std::to_string(failed) + " of " +
                           std::to_string(opt.boot_b) + " resamples failed");

  EffectEstimate out;
  out.point = vector_mean(estimates);
  double sd = vector_sd(estimates);
  out.variance = sd * sd;
  out.estimand = Estimand::marginal;
  out.scale = EffectScale::log_odds_ratio;
  out.comparison = Comparison::a_vs_c;
  out.failed_resamples = failed;
  out.total_resamples = opt.boot_b;
  set_wald_interval(out);
  return out;
}

}  // namespace popadjust
