#include "popadjust/gcomp.hpp"

#include <algorithm>
#include <cmath>

#include "popadjust/distributions.hpp"
#include "popadjust/errors.hpp"

namespace popadjust {

namespace {

// permutation-stable mean: summing in sorted order makes the result a pure
// function of the multiset of values
double stable_mean(Vector values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double link_contrast(Link link, double mu1, double mu0) {
  switch (link) {
    case Link::logit:
      if (mu1 <= 0.0 || mu1 >= 1.0 || mu0 <= 0.0 || mu0 >= 1.0)
        throw DegenerateMeanError("gcomp: counterfactual mean at the boundary");
      return logit(mu1) - logit(mu0);
    case Link::log:
      if (mu1 <= 0.0 || mu0 <= 0.0)
        throw DegenerateMeanError("gcomp: nonpositive counterfactual mean");
      return std::log(mu1) - std::log(mu0);
    case Link::identity:
      return mu1 - mu0;
  }
  throw ConfigError("gcomp: unknown link");
}

EffectEstimate summarize_draws(const Vector& deltas, bool percentile_ci) {
  EffectEstimate out;
  out.point = vector_mean(deltas);
  double sd = vector_sd(deltas);
  out.variance = sd * sd;
  out.estimand = Estimand::marginal;
  out.scale = EffectScale::log_odds_ratio;
  out.comparison = Comparison::a_vs_c;
  if (percentile_ci) {
    out.ci_lower = sample_quantile(deltas, 0.025);
    out.ci_upper = sample_quantile(deltas, 0.975);
  } else {
    set_wald_interval(out);
  }
  return out;
}

}  // namespace

GcompPoint gcomp_point(const GlmFit& fit, const ModelSpec& spec, const Matrix& x_star) {
  if (x_star.rows() == 0) throw ShapeError("gcomp_point: empty profile matrix");
  GcompPoint out;
  out.means.mu1 = stable_mean(predict_mean(fit, spec, x_star, 1));
  out.means.mu0 = stable_mean(predict_mean(fit, spec, x_star, 0));
  out.delta = link_contrast(spec.link, out.means.mu1, out.means.mu0);
  return out;
}

EffectEstimate gcomp_ml(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                        const GcompOptions& opt, RngStream& rng) {
  ipd.validate();
  spec.validate(ipd.k());
  if (x_star.cols() != ipd.k())
    throw ShapeError("gcomp_ml: profile matrix column count does not match IPD");
  if (opt.boot_b < 2) throw ConfigError("gcomp_ml: need at least 2 resamples");

  const std::size_t n = ipd.n();
  IpdDataset sample;
  sample.x = Matrix(n, ipd.k());
  sample.treatment.resize(n);
  sample.y.resize(n);

  Vector deltas;
  deltas.reserve(opt.boot_b);
  std::size_t failed = 0;
  for (std::size_t b = 0; b < opt.boot_b; ++b) {
    RngStream sub = rng.fork(b);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = sub.uniform_index(n);
      for (std::size_t j = 0; j < ipd.k(); ++j) sample.x(i, j) = ipd.x(r, j);
      sample.treatment[i] = ipd.treatment[r];
      sample.y[i] = ipd.y[r];
    }
    try {
      GlmFit fit = fit_glm(spec, sample);
      deltas.push_back(gcomp_point(fit, spec, x_star).delta);
    } catch (const SeparationError&) {
      ++failed;
    } catch (const DegenerateMeanError&) {
      ++failed;
    }
  }

  double frac = static_cast<double>(failed) / static_cast<double>(opt.boot_b);
  if (frac > opt.failure_cap || deltas.size() < 2)
    throw EstimationFailed("gcomp_ml: " + std::to_string(failed) + " of " +
                           std::to_string(opt.boot_b) + " resamples failed");

  EffectEstimate out = summarize_draws(deltas, false);
  out.failed_resamples = failed;
  out.total_resamples = opt.boot_b;
  return out;
}

EffectEstimate gcomp_paramsim(const GlmFit& fit, const ModelSpec& spec, const Matrix& x_star,
                              std::size_t n_draws, RngStream& rng) {
  if (n_draws < 2) throw ConfigError("gcomp_paramsim: need at least 2 draws");
  if (!fit.converged) throw EstimationFailed("gcomp_paramsim: underlying fit not converged");
  Matrix chol = cholesky(fit.vcov);  // NotPosDef propagates
  const std::size_t p = fit.coef.size();

  GlmFit draw_fit = fit;
  Vector eps(p);
  Vector deltas;
  deltas.reserve(n_draws);
  for (std::size_t d = 0; d < n_draws; ++d) {
    for (std::size_t j = 0; j < p; ++j) eps[j] = sample_normal(rng);
    for (std::size_t j = 0; j < p; ++j) {
      double move = 0.0;
      for (std::size_t l = 0; l <= j; ++l) move += chol(j, l) * eps[l];
      draw_fit.coef[j] = fit.coef[j] + move;
    }
    deltas.push_back(gcomp_point(draw_fit, spec, x_star).delta);
  }
  EffectEstimate out = summarize_draws(deltas, true);
  out.total_resamples = n_draws;
  return out;
}

EffectEstimate gcomp_bayes(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                           const BayesGcompOptions& opt, RngStream& rng,
                           McmcDiagnostics* diagnostics) {
  if (x_star.rows() == 0) throw ShapeError("gcomp_bayes: empty profile matrix");
  if (x_star.cols() != ipd.k())
    throw ShapeError("gcomp_bayes: profile matrix column count does not match IPD");
  if (!(opt.drop_cap >= 0.0 && opt.drop_cap <= 1.0))
    throw ConfigError("gcomp_bayes: drop cap outside [0,1]");

  PosteriorDraws post = sample_glm_posterior(spec, ipd, opt.prior, opt.mcmc, rng);
  const std::size_t l = post.n_draws();
  const std::size_t m = x_star.rows();

  Matrix design1(m, spec.design_dim());
  Matrix design0(m, spec.design_dim());
  Vector row;
  for (std::size_t i = 0; i < m; ++i) {
    design_row(spec, x_star, i, 1.0, row);
    for (std::size_t j = 0; j < row.size(); ++j) design1(i, j) = row[j];
    design_row(spec, x_star, i, 0.0, row);
    for (std::size_t j = 0; j < row.size(); ++j) design0(i, j) = row[j];
  }

  RngStream imp_root = rng.fork(0);
  Vector deltas;
  deltas.reserve(l);
  std::size_t dropped = 0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t d = 0; d < l; ++d) {
    RngStream imp = imp_root.fork(d);
    double sum1 = 0.0, sum0 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (sample_bernoulli(imp, expit(dot(design1.row(i), post.draws.row(d))))) sum1 += 1.0;
      if (sample_bernoulli(imp, expit(dot(design0.row(i), post.draws.row(d))))) sum0 += 1.0;
    }
    double mean1 = sum1 * inv_m;
    double mean0 = sum0 * inv_m;
    if (mean1 <= 0.0 || mean1 >= 1.0 || mean0 <= 0.0 || mean0 >= 1.0) {
      ++dropped;
      continue;
    }
    deltas.push_back(logit(mean1) - logit(mean0));
  }

  if (diagnostics != nullptr) {
    diagnostics->rhat = post.rhat;
    diagnostics->ess = post.ess;
    diagnostics->dropped_draws = dropped;
  }
  double frac = static_cast<double>(dropped) / static_cast<double>(l);
  if (frac > opt.drop_cap || deltas.size() < 2)
    throw EstimationFailed("gcomp_bayes: " + std::to_string(dropped) + " of " +
                           std::to_string(l) + " posterior draws degenerate");

  EffectEstimate out = summarize_draws(deltas, true);
  out.failed_resamples = dropped;
  out.total_resamples = l;
  return out;
}

EffectEstimate gcomp_cox(const ModelSpec& spec, const SurvivalData& data, const Matrix& x_star,
                         double t, const GcompOptions& opt, RngStream& rng) {
  data.validate();
  spec.validate(data.k());
  if (x_star.cols() != data.k())
    throw ShapeError("gcomp_cox: profile matrix column count does not match data");
  if (opt.boot_b < 2) throw ConfigError("gcomp_cox: need at least 2 resamples");

  const std::size_t n = data.n();
  SurvivalData sample;
  sample.x = Matrix(n, data.k());
  sample.treatment.resize(n);
  sample.time.resize(n);
  sample.event.resize(n);

  Vector deltas;
  deltas.reserve(opt.boot_b);
  std::size_t failed = 0;
  for (std::size_t b = 0; b < opt.boot_b; ++b) {
    RngStream sub = rng.fork(b);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = sub.uniform_index(n);
      for (std::size_t j = 0; j < data.k(); ++j) sample.x(i, j) = data.x(r, j);
      sample.treatment[i] = data.treatment[r];
      sample.time[i] = data.time[r];
      sample.event[i] = data.event[r];
    }
    try {
      CoxFit fit = fit_cox(spec, sample);
      deltas.push_back(marginal_log_hr(fit, spec, x_star, t));
    } catch (const SeparationError&) {
      ++failed;
    }
  }

  double frac = static_cast<double>(failed) / static_cast<double>(opt.boot_b);
  if (frac > opt.failure_cap || deltas.size() < 2)
    throw EstimationFailed("gcomp_cox: " + std::to_string(failed) + " of " +
                           std::to_string(opt.boot_b) + " resamples failed");

  EffectEstimate out = summarize_draws(deltas, false);
  out.scale = EffectScale::log_hazard_ratio;
  out.failed_resamples = failed;
  out.total_resamples = opt.boot_b;
  return out;
}

}  // namespace popadjust
