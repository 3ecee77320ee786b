#pragma once
#include <cstddef>
#include <vector>

#include "popadjust/data.hpp"
#include "popadjust/glm.hpp"
#include "popadjust/linalg.hpp"
#include "popadjust/mcmc.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

// M simulated outcome vectors on a shared covariate grid. The treatment
// assignment puts the first round(n * alloc_ratio) rows on active treatment
// and is identical across simulations.
struct SynthesisSet {
  Matrix x_star;
  std::vector<int> z_star;
  std::vector<std::vector<int>> outcomes;

  std::size_t n_sets() const { return outcomes.size(); }
  std::size_t n_star() const { return z_star.size(); }
  void validate() const;
};

// Second-stage coefficients and variances after dropping degenerate sets.
struct SecondStage {
  Vector delta;
  Vector v;
  std::size_t degenerate = 0;
};

enum class PoolMethod { rules, posterior_sim };

struct PooledEstimate {
  double delta_bar = 0.0;  // mean of second-stage coefficients
  double v_bar = 0.0;      // mean within-simulation variance
  double b = 0.0;          // between-simulation variance
  double point = 0.0;
  double variance = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  PoolMethod method = PoolMethod::rules;
};

struct MimOptions {
  std::size_t syntheses = 1000;    // M
  double alloc_ratio = 2.0 / 3.0;  // fraction of x_star rows on active treatment
  PriorSpec prior;
  McmcConfig mcmc;
  double degenerate_cap = 0.01;
  bool posterior_pool = false;
  std::size_t pool_draws = 10000;  // R when posterior_pool is set
  bool t_interval = false;         // heavier-tailed interval for rules pooling
};

// Draw M outcome vectors from the posterior predictive of the outcome model
// evaluated on x_star. M must divide the posterior draw count; the draws used
// are then taken at an even stride so syntheses span the whole chain.
SynthesisSet mim_synthesize(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                            std::size_t m, double alloc_ratio, const PriorSpec& prior,
                            const McmcConfig& config, RngStream& rng);

// Treatment-only logistic fit on simulated dataset m. The coefficient and its
// variance have closed forms in the 2x2 cell counts, which this uses; they
// match the iterative fit exactly. Throws SynthesisDegenerateError when an arm
// is all-0 or all-1.
void mim_analyze_one(const SynthesisSet& set, std::size_t m, double& delta_out, double& v_out);

// Second stage across all simulations. Degenerate sets are dropped and
// counted; a degenerate fraction above degenerate_cap fails the estimation.
SecondStage mim_analyze(const SynthesisSet& set, double degenerate_cap = 0.01);

// Combining-rules pooling: point = mean coefficient, variance =
// (1 + 1/M) b - v_bar. t_interval switches the Wald interval to a t quantile
// with (M-1) (1 + v_bar / ((1 + 1/M) b))^2 degrees of freedom.
PooledEstimate mim_pool_rules(const Vector& delta, const Vector& v, bool t_interval = false);

struct PosteriorPool {
  PooledEstimate pooled;  // point/variance/CI summarize the draws
  Vector draws;
  std::size_t rejected = 0;  // discarded negative-variance proposals
};

// Posterior-simulation pooling: r_draws draws of the pooled effect from the
// two-level normal model. Negative variance proposals are rejected and
// redrawn; persistent rejection raises PoolingUnstableError.
PosteriorPool mim_pool_posterior(const Vector& delta, const Vector& v, std::size_t r_draws,
                                 RngStream& rng);

// Synthesize + analyze + pool, reported on the marginal log odds ratio scale.
// stage_out, when non-null, receives the per-simulation second-stage results.
EffectEstimate mim_estimate(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                            const MimOptions& opt, RngStream& rng,
                            SecondStage* stage_out = nullptr);

}  // namespace popadjust
