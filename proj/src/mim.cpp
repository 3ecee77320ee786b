#include "popadjust/mim.hpp"

#include <cmath>
#include <string>

#include "popadjust/distributions.hpp"
#include "popadjust/errors.hpp"

namespace popadjust {

void SynthesisSet::validate() const {
  if (outcomes.size() < 2)
    throw ConfigError("SynthesisSet: at least two simulated datasets required");
  if (x_star.rows() != z_star.size())
    throw ShapeError("SynthesisSet: covariate rows and treatment length differ");
  bool has0 = false;
  bool has1 = false;
  for (int z : z_star) {
    if (z != 0 && z != 1) throw ValueError("SynthesisSet: treatment must be 0/1");
    if (z == 0) has0 = true;
    else has1 = true;
  }
  if (!has0 || !has1) throw ValueError("SynthesisSet: both arms must be populated");
  for (const auto& y : outcomes) {
    if (y.size() != z_star.size())
      throw ShapeError("SynthesisSet: outcome length differs from treatment length");
    for (int yi : y)
      if (yi != 0 && yi != 1) throw ValueError("SynthesisSet: outcomes must be 0/1");
  }
}

SynthesisSet mim_synthesize(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                            std::size_t m, double alloc_ratio, const PriorSpec& prior,
                            const McmcConfig& config, RngStream& rng) {
  if (m < 2) throw ConfigError("mim_synthesize: at least two syntheses required");
  if (!(alloc_ratio > 0.0 && alloc_ratio < 1.0))
    throw ConfigError("mim_synthesize: allocation ratio must be in (0, 1)");
  const std::size_t n = x_star.rows();
  if (n == 0) throw ShapeError("mim_synthesize: x_star has no rows");
  const auto n_active =
      static_cast<std::size_t>(std::lround(alloc_ratio * static_cast<double>(n)));
  if (n_active == 0 || n_active >= n)
    throw ConfigError("mim_synthesize: allocation leaves an empty arm");

  PosteriorDraws post = sample_glm_posterior(spec, ipd, prior, config, rng);
  const std::size_t l = post.n_draws();
  if (m > l || l % m != 0)
    throw ConfigError("mim_synthesize: synthesis count must divide the posterior draw count (" +
                      std::to_string(m) + " vs " + std::to_string(l) + ")");
  const std::size_t stride = l / m;

  SynthesisSet set;
  set.x_star = x_star;
  set.z_star.assign(n, 0);
  for (std::size_t i = 0; i < n_active; ++i) set.z_star[i] = 1;

  // Design rows are shared by every synthesis; build them once.
  Matrix design = build_design(spec, x_star, set.z_star);

  RngStream sim_root = rng.fork(0);
  set.outcomes.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    RngStream gen = sim_root.fork(j);
    Vector beta = post.draws.row(j * stride);
    std::vector<int>& y = set.outcomes[j];
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = sample_bernoulli(gen, expit(dot(design.row(i), beta)));
  }
  return set;
}

void mim_analyze_one(const SynthesisSet& set, std::size_t m, double& delta_out, double& v_out) {
  if (m >= set.n_sets()) throw ConfigError("mim_analyze_one: synthesis index out of range");
  const std::vector<int>& y = set.outcomes[m];
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // events/non-events by arm
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (set.z_star[i] == 1) {
      if (y[i] == 1) a += 1.0;
      else b += 1.0;
    } else {
      if (y[i] == 1) c += 1.0;
      else d += 1.0;
    }
  }
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0)
    throw SynthesisDegenerateError(m, "mim_analyze: arm with all-0 or all-1 outcomes in set " +
                                          std::to_string(m));
  delta_out = std::log(a * d / (b * c));
  v_out = 1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d;
}

SecondStage mim_analyze(const SynthesisSet& set, double degenerate_cap) {
  set.validate();
  if (!(degenerate_cap >= 0.0 && degenerate_cap < 1.0))
    throw ConfigError("mim_analyze: degenerate cap must be in [0, 1)");
  const std::size_t m = set.n_sets();
  SecondStage out;
  out.delta.reserve(m);
  out.v.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    double dj = 0.0, vj = 0.0;
    try {
      mim_analyze_one(set, j, dj, vj);
    } catch (const SynthesisDegenerateError&) {
      ++out.degenerate;
      continue;
    }
    out.delta.push_back(dj);
    out.v.push_back(vj);
  }
  if (static_cast<double>(out.degenerate) > degenerate_cap * static_cast<double>(m))
    throw EstimationFailed("mim_analyze: " + std::to_string(out.degenerate) + " of " +
                           std::to_string(m) + " simulated datasets are degenerate");
  return out;
}

namespace {

struct PoolMoments {
  double delta_bar, v_bar, b;
};

PoolMoments pool_moments(const Vector& delta, const Vector& v, const char* who) {
  if (v.size() != delta.size())
    throw ShapeError(std::string(who) + ": delta and v lengths differ");
  for (double vi : v)
    if (!(vi > 0.0)) throw ValueError(std::string(who) + ": within variances must be positive");
  return {vector_mean(delta), vector_mean(v), vector_variance(delta)};
}

}  // namespace

PooledEstimate mim_pool_rules(const Vector& delta, const Vector& v, bool t_interval) {
  const std::size_t m = delta.size();
  if (m < 2) throw ConfigError("mim_pool_rules: at least two estimates required");
  PoolMoments mo = pool_moments(delta, v, "mim_pool_rules");
  const double md = static_cast<double>(m);
  const double variance = (1.0 + 1.0 / md) * mo.b - mo.v_bar;
  if (!(variance > 0.0))
    throw NegativeVarianceError(m, mo.b, mo.v_bar,
                                "mim_pool_rules: pooled variance " + std::to_string(variance) +
                                    " is not positive (b=" + std::to_string(mo.b) +
                                    ", v_bar=" + std::to_string(mo.v_bar) + ")");
  PooledEstimate out;
  out.delta_bar = mo.delta_bar;
  out.v_bar = mo.v_bar;
  out.b = mo.b;
  out.point = mo.delta_bar;
  out.variance = variance;
  out.method = PoolMethod::rules;
  double z = kZ975;
  if (t_interval) {
    const double ratio = mo.v_bar / ((1.0 + 1.0 / md) * mo.b);
    const double nu = (md - 1.0) * (1.0 + ratio) * (1.0 + ratio);
    z = student_t_quantile(0.975, nu);
  }
  const double half = z * std::sqrt(variance);
  out.ci_lower = out.point - half;
  out.ci_upper = out.point + half;
  return out;
}

PosteriorPool mim_pool_posterior(const Vector& delta, const Vector& v, std::size_t r_draws,
                                 RngStream& rng) {
  const std::size_t m = delta.size();
  if (m < 3) throw ConfigError("mim_pool_posterior: at least three estimates required");
  if (r_draws < 2) throw ConfigError("mim_pool_posterior: at least two draws required");
  PoolMoments mo = pool_moments(delta, v, "mim_pool_posterior");
  const double md = static_cast<double>(m);
  const double nu = md - 1.0;
  const std::size_t kRetryCap = 1000;

  PosteriorPool out;
  out.draws.resize(r_draws);
  for (std::size_t r = 0; r < r_draws; ++r) {
    const double mu = sample_normal(rng, mo.delta_bar, std::sqrt(mo.v_bar / md));
    double sigma2 = -1.0;
    bool accepted = false;
    for (std::size_t t = 0; t < kRetryCap; ++t) {
      const double chi = sample_chi_squared(rng, nu);
      sigma2 = nu * mo.b / chi - mo.v_bar;
      if (sigma2 > 0.0) {
        accepted = true;
        break;
      }
      ++out.rejected;
    }
    if (!accepted)
      throw PoolingUnstableError("mim_pool_posterior: variance proposal rejected " +
                                 std::to_string(kRetryCap) + " times in a row");
    out.draws[r] = mu + std::sqrt((1.0 + 1.0 / md) * sigma2) * sample_student_t(rng, nu);
  }
  // Rate over all proposals; accepted count equals r_draws.
  if (out.rejected > r_draws)
    throw PoolingUnstableError("mim_pool_posterior: " + std::to_string(out.rejected) +
                               " rejected variance proposals against " +
                               std::to_string(r_draws) + " accepted");

  out.pooled.delta_bar = mo.delta_bar;
  out.pooled.v_bar = mo.v_bar;
  out.pooled.b = mo.b;
  out.pooled.point = vector_mean(out.draws);
  out.pooled.variance = vector_variance(out.draws);
  out.pooled.ci_lower = sample_quantile(out.draws, 0.025);
  out.pooled.ci_upper = sample_quantile(out.draws, 0.975);
  out.pooled.method = PoolMethod::posterior_sim;
  return out;
}

EffectEstimate mim_estimate(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                            const MimOptions& opt, RngStream& rng, SecondStage* stage_out) {
  SynthesisSet set = mim_synthesize(spec, ipd, x_star, opt.syntheses, opt.alloc_ratio, opt.prior,
                                    opt.mcmc, rng);
  SecondStage stage = mim_analyze(set, opt.degenerate_cap);

  EffectEstimate out;
  out.estimand = Estimand::marginal;
  out.scale = EffectScale::log_odds_ratio;
  out.comparison = Comparison::a_vs_c;
  out.total_resamples = opt.syntheses;
  out.failed_resamples = stage.degenerate;
  if (opt.posterior_pool) {
    // First fork key not taken by the sampler's chains (1..C) or the
    // synthesis stream (0).
    RngStream pool_rng = rng.fork(opt.mcmc.chains + 1);
    PosteriorPool pool = mim_pool_posterior(stage.delta, stage.v, opt.pool_draws, pool_rng);
    out.point = pool.pooled.point;
    out.variance = pool.pooled.variance;
    out.ci_lower = pool.pooled.ci_lower;
    out.ci_upper = pool.pooled.ci_upper;
  } else {
    PooledEstimate pe = mim_pool_rules(stage.delta, stage.v, opt.t_interval);
    out.point = pe.point;
    out.variance = pe.variance;
    out.ci_lower = pe.ci_lower;
    out.ci_upper = pe.ci_upper;
  }
  if (stage_out) *stage_out = stage;
  return out;
}

}  // namespace popadjust
