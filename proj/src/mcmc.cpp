#include "popadjust/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "popadjust/distributions.hpp"
#include "popadjust/errors.hpp"

namespace popadjust {

namespace {

constexpr double kProposalDf = 8.0;

double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return 0.0;
  return std::log1p(std::exp(x));
}

struct Target {
  const Matrix* design;
  const Vector* y;
  Vector prior_scale;

  double logpost(const Vector& beta) const {
    double lp = 0.0;
    for (std::size_t i = 0; i < design->rows(); ++i) {
      double eta = dot(design->row(i), beta);
      lp += (*y)[i] * eta - softplus(eta);
    }
    for (std::size_t j = 0; j < beta.size(); ++j) {
      double s = prior_scale[j];
      lp -= beta[j] * beta[j] / (2.0 * s * s);
    }
    return lp;
  }
};

// Newton ascent to the posterior mode plus the curvature there.  The target is
// strictly concave under the logit link with Gaussian priors, so this always
// converges and the negated Hessian is positive definite.
struct Laplace {
  Vector mode;
  Matrix hess_chol;  // lower Cholesky factor of -d2 logpost at the mode
};

Laplace laplace_fit(const Target& target) {
  const Matrix& x = *target.design;
  const Vector& y = *target.y;
  const std::size_t p = target.prior_scale.size();
  const std::size_t n = x.rows();

  Laplace fit;
  fit.mode.assign(p, 0.0);
  double lp = target.logpost(fit.mode);
  Matrix hl;
  Vector grad(p), step, cand(p);
  for (std::size_t it = 0; it < 60; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    Matrix h(p, p);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x.row_ptr(i);
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += xi[j] * fit.mode[j];
      double mu = expit(eta);
      double w = std::max(mu * (1.0 - mu), 1e-10);
      double r = y[i] - mu;
      for (std::size_t j = 0; j < p; ++j) {
        grad[j] += xi[j] * r;
        for (std::size_t l = j; l < p; ++l) h(j, l) += w * xi[j] * xi[l];
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      double s2 = target.prior_scale[j] * target.prior_scale[j];
      grad[j] -= fit.mode[j] / s2;
      h(j, j) += 1.0 / s2;
      for (std::size_t l = 0; l < j; ++l) h(j, l) = h(l, j);
    }
    hl = cholesky(h);
    step = cholesky_solve(hl, grad);
    double longest = 0.0;
    for (double s : step) longest = std::max(longest, std::fabs(s));
    if (longest < 1e-9) break;
    double scale = 1.0;
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < p; ++j) cand[j] = fit.mode[j] + scale * step[j];
      double cand_lp = target.logpost(cand);
      if (cand_lp >= lp - 1e-12) {
        fit.mode = cand;
        lp = cand_lp;
        break;
      }
      scale *= 0.5;
    }
  }
  fit.hess_chol = hl;
  return fit;
}

// Independence Metropolis-Hastings with a multivariate-t proposal sitting on
// the Laplace approximation.  The heavy proposal tails dominate the strictly
// log-concave target, so the chain is uniformly ergodic and needs no tuning;
// one chain's post-warmup thinned states are written into [first, first+kept).
void run_chain(const Target& target, const Laplace& fit, const McmcConfig& config,
               RngStream& rng, Matrix& out, std::size_t first) {
  const std::size_t p = target.prior_scale.size();
  const Matrix& l = fit.hess_chol;

  Vector eps(p), move(p), beta(p), cand(p);
  // back-substitute U move = eps with U = hess_chol^T, so move ~ N(0, H^{-1})
  auto precondition = [&]() {
    for (std::size_t j = p; j-- > 0;) {
      double acc = eps[j];
      for (std::size_t k = j + 1; k < p; ++k) acc -= l(k, j) * move[k];
      move[j] = acc / l(j, j);
    }
  };
  // proposal log density up to a constant: -((df+p)/2) log(1 + ||U m||^2 / df)
  auto log_prop = [&](const Vector& b) {
    double q2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = j; k < p; ++k) acc += l(k, j) * (b[k] - fit.mode[k]);
      q2 += acc * acc;
    }
    return -0.5 * (kProposalDf + static_cast<double>(p)) * std::log1p(q2 / kProposalDf);
  };
  auto draw_prop = [&](Vector& b) {
    for (std::size_t j = 0; j < p; ++j) eps[j] = sample_normal(rng);
    precondition();
    double g = sample_chi_squared(rng, kProposalDf) / kProposalDf;
    double s = 1.0 / std::sqrt(g);
    for (std::size_t j = 0; j < p; ++j) b[j] = fit.mode[j] + s * move[j];
  };

  draw_prop(beta);
  double lp = target.logpost(beta);
  double lq = log_prop(beta);

  std::size_t kept = 0;
  for (std::size_t t = 1; t <= config.iters; ++t) {
    draw_prop(cand);
    double cand_lp = target.logpost(cand);
    double cand_lq = log_prop(cand);
    double log_ratio = (cand_lp - lp) + (lq - cand_lq);
    bool accept = std::isfinite(cand_lp) &&
                  (log_ratio >= 0.0 || rng.uniform() < std::exp(log_ratio));
    if (accept) {
      beta = cand;
      lp = cand_lp;
      lq = cand_lq;
    }
    if (t > config.warmup) {
      std::size_t k = t - config.warmup - 1;
      if (k % config.thin == 0) {
        for (std::size_t j = 0; j < p; ++j) out(first + kept, j) = beta[j];
        ++kept;
      }
    }
  }
}

// Geyer initial-positive-sequence integrated autocorrelation time
double chain_tau(const Matrix& draws, std::size_t begin, std::size_t len, std::size_t param) {
  double mean = 0.0;
  for (std::size_t i = 0; i < len; ++i) mean += draws(begin + i, param);
  mean /= static_cast<double>(len);
  auto gamma_at = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < len; ++i)
      acc += (draws(begin + i, param) - mean) * (draws(begin + i + lag, param) - mean);
    return acc / static_cast<double>(len);
  };
  double g0 = gamma_at(0);
  if (!(g0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t k = 1; k + 1 < len / 2; k += 2) {
    double pair = (gamma_at(k) + gamma_at(k + 1)) / g0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(tau, 0.01);
}

}  // namespace

void PriorSpec::validate() const {
  if (!(intercept_scale > 0.0) || !(coef_scale > 0.0))
    throw ConfigError("PriorSpec: scales must be positive");
}

void McmcConfig::validate() const {
  if (chains < 1) throw ConfigError("McmcConfig: need at least one chain");
  if (warmup >= iters) throw ConfigError("McmcConfig: warmup must leave sampling iterations");
  if (thin == 0) throw ConfigError("McmcConfig: thin must be positive");
  if ((iters - warmup) % thin != 0)
    throw ConfigError("McmcConfig: thin must divide the post-warmup iteration count");
}

Vector split_rhat(const Matrix& draws, std::size_t chains) {
  if (chains == 0 || draws.rows() % chains != 0)
    throw ShapeError("split_rhat: draws not divisible into chains");
  const std::size_t per_chain = draws.rows() / chains;
  const std::size_t half = per_chain / 2;
  if (half < 2) throw ShapeError("split_rhat: chains too short to split");
  const std::size_t m = 2 * chains;
  const std::size_t p = draws.cols();

  Vector out(p);
  for (std::size_t j = 0; j < p; ++j) {
    Vector means(m), vars(m);
    for (std::size_t c = 0; c < chains; ++c) {
      for (int side = 0; side < 2; ++side) {
        // when per_chain is odd the middle draw is dropped
        std::size_t begin = c * per_chain + (side == 0 ? 0 : per_chain - half);
        double mu = 0.0;
        for (std::size_t i = 0; i < half; ++i) mu += draws(begin + i, j);
        mu /= static_cast<double>(half);
        double ss = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
          double c2 = draws(begin + i, j) - mu;
          ss += c2 * c2;
        }
        means[2 * c + side] = mu;
        vars[2 * c + side] = ss / static_cast<double>(half - 1);
      }
    }
    double w = vector_mean(vars);
    double b_over_n = vector_variance(means);  // B/n in the usual notation
    if (!(w > 0.0)) {
      out[j] = b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
      continue;
    }
    double nn = static_cast<double>(half);
    double var_hat = (nn - 1.0) / nn * w + b_over_n;
    out[j] = std::max(1.0, std::sqrt(var_hat / w));
  }
  return out;
}

PosteriorDraws sample_glm_posterior(const ModelSpec& spec, const IpdDataset& data,
                                    const PriorSpec& prior, const McmcConfig& config,
                                    RngStream& rng) {
  prior.validate();
  config.validate();
  if (spec.link != Link::logit)
    throw ConfigError("sample_glm_posterior: binomial engine requires the logit link");
  const std::size_t n = data.n();
  if (n > 0) data.validate();
  spec.validate(data.k());

  Matrix design = build_design(spec, data.x, data.treatment);
  const std::size_t p = design.cols();
  Vector y(data.y.begin(), data.y.end());

  Target target;
  target.design = &design;
  target.y = &y;
  target.prior_scale.assign(p, prior.coef_scale);
  target.prior_scale[0] = prior.intercept_scale;
  if (prior.autoscale && n >= 2) {
    for (std::size_t j = 1; j < p; ++j) {
      Vector col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = design(i, j);
      double sd = vector_sd(col);
      if (sd > 0.0) target.prior_scale[j] = prior.coef_scale / sd;
    }
  }

  Laplace fit;
  try {
    fit = laplace_fit(target);
  } catch (const NotPosDefError&) {
    fit.mode.assign(p, 0.0);
    fit.hess_chol = Matrix(p, p);
    for (std::size_t j = 0; j < p; ++j)
      fit.hess_chol(j, j) = 1.0 / std::max(target.prior_scale[j], 0.1);
  }

  const std::size_t per_chain = (config.iters - config.warmup) / config.thin;
  PosteriorDraws out;
  out.chains = config.chains;
  out.draws = Matrix(per_chain * config.chains, p);
  for (std::size_t c = 0; c < config.chains; ++c) {
    RngStream chain_rng = rng.fork(c + 1);
    run_chain(target, fit, config, chain_rng, out.draws, c * per_chain);
  }

  out.rhat = split_rhat(out.draws, config.chains);
  out.ess.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < config.chains; ++c)
      acc += static_cast<double>(per_chain) / chain_tau(out.draws, c * per_chain, per_chain, j);
    out.ess[j] = acc;
  }

  if (config.diagnostics_error)
    for (std::size_t j = 0; j < p; ++j)
      if (!(out.rhat[j] <= config.rhat_limit))
        throw DiagnosticsFailedError("sample_glm_posterior: split R-hat " +
                                     std::to_string(out.rhat[j]) + " for parameter " +
                                     std::to_string(j) + " exceeds " +
                                     std::to_string(config.rhat_limit));
  return out;
}

Matrix posterior_predict(const PosteriorDraws& draws, const ModelSpec& spec,
                         const Matrix& newdata, const std::vector<int>& treatment,
                         RngStream& rng) {
  if (treatment.size() != newdata.rows())
    throw ShapeError("posterior_predict: one treatment value per row required");
  for (int z : treatment)
    if (z != 0 && z != 1) throw ValueError("posterior_predict: treatment must be 0/1");
  spec.validate(newdata.cols());
  if (spec.design_dim() != draws.n_params())
    throw ShapeError("posterior_predict: draw dimension does not match the model");

  const std::size_t l = draws.n_draws();
  const std::size_t m = newdata.rows();
  Matrix out(l, m);
  Vector row;
  for (std::size_t i = 0; i < m; ++i) {
    design_row(spec, newdata, i, static_cast<double>(treatment[i]), row);
    for (std::size_t d = 0; d < l; ++d) {
      double pr = expit(dot(row, draws.draws.row(d)));
      out(d, i) = sample_bernoulli(rng, pr) ? 1.0 : 0.0;
    }
  }
  return out;
}

Matrix posterior_predict(const PosteriorDraws& draws, const ModelSpec& spec,
                         const Matrix& newdata, int set_treatment, RngStream& rng) {
  if (set_treatment != 0 && set_treatment != 1)
    throw ValueError("posterior_predict: treatment must be 0 or 1");
  std::vector<int> z(newdata.rows(), set_treatment);
  return posterior_predict(draws, spec, newdata, z, rng);
}

}  // namespace popadjust
