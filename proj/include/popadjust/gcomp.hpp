#pragma once
#include <cstddef>

#include "popadjust/cox.hpp"
#include "popadjust/data.hpp"
#include "popadjust/glm.hpp"
#include "popadjust/linalg.hpp"
#include "popadjust/mcmc.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

struct CounterfactualMeans {
  double mu1 = 0.0;  // average natural-scale prediction, everyone treated
  double mu0 = 0.0;  // everyone on comparator
};

struct GcompPoint {
  CounterfactualMeans means;
  double delta = 0.0;  // link-scale contrast g(mu1) - g(mu0)
};

// Average the fitted outcome model over the covariate profiles under both
// treatment assignments, then contrast on the link scale.
GcompPoint gcomp_point(const GlmFit& fit, const ModelSpec& spec, const Matrix& x_star);

struct GcompOptions {
  std::size_t boot_b = 1000;
  double failure_cap = 0.05;
};

// Bootstrap: refit the outcome model per resample, marginalize over the fixed
// profile matrix; resample mean and SD give the estimate and its SE.
EffectEstimate gcomp_ml(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                        const GcompOptions& opt, RngStream& rng);

// Parameter simulation: draw coefficient vectors from the asymptotic normal
// around the fit, marginalize each; percentile interval over the draws.
EffectEstimate gcomp_paramsim(const GlmFit& fit, const ModelSpec& spec, const Matrix& x_star,
                              std::size_t n_draws, RngStream& rng);

struct BayesGcompOptions {
  PriorSpec prior;
  McmcConfig mcmc;
  double drop_cap = 0.01;  // tolerated fraction of degenerate posterior draws
};

struct McmcDiagnostics {
  Vector rhat;
  Vector ess;
  std::size_t dropped_draws = 0;
};

// Bayesian marginalization: per posterior draw, impute binary outcomes for the
// profile matrix under both arms and contrast the imputed means; draws whose
// imputed arm is all-0 or all-1 are dropped (capped).
EffectEstimate gcomp_bayes(const ModelSpec& spec, const IpdDataset& ipd, const Matrix& x_star,
                           const BayesGcompOptions& opt, RngStream& rng,
                           McmcDiagnostics* diagnostics = nullptr);

// Survival flavor: bootstrap the proportional-hazards fit and read off the
// marginal log hazard ratio at time t.
EffectEstimate gcomp_cox(const ModelSpec& spec, const SurvivalData& data, const Matrix& x_star,
                         double t, const GcompOptions& opt, RngStream& rng);

}  // namespace popadjust
