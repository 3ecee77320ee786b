#pragma once
#include <cstddef>
#include <vector>

#include "popadjust/data.hpp"
#include "popadjust/glm.hpp"
#include "popadjust/linalg.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

// Independent normal priors; coefficient scales are divided by the predictor's
// standard deviation when autoscale is on, so the prior tightness tracks the
// units of each column.
struct PriorSpec {
  double intercept_scale = 1.0;
  double coef_scale = 2.5;
  bool autoscale = true;

  void validate() const;
};

struct McmcConfig {
  std::size_t chains = 2;
  std::size_t iters = 4000;  // per chain, warmup included
  std::size_t warmup = 2000;
  std::size_t thin = 1;
  double rhat_limit = 1.1;
  bool diagnostics_error = true;  // throw on R-hat breach instead of returning

  void validate() const;
};

struct PosteriorDraws {
  Matrix draws;  // L x P, chains concatenated in order
  std::size_t chains = 0;
  Vector rhat;  // per parameter, split-chain, clamped at 1 from below
  Vector ess;   // per parameter

  std::size_t n_draws() const { return draws.rows(); }
  std::size_t n_params() const { return draws.cols(); }
};

// Random-walk Metropolis with warmup-only adaptation of the proposal scale
// (Robbins-Monro toward 0.234 acceptance) and covariance. Zero-row data is
// allowed and recovers the prior.
PosteriorDraws sample_glm_posterior(const ModelSpec& spec, const IpdDataset& data,
                                    const PriorSpec& prior, const McmcConfig& config,
                                    RngStream& rng);

// Per-parameter split-chain convergence diagnostic for chain-concatenated
// draws; exposed for direct testing.
Vector split_rhat(const Matrix& draws, std::size_t chains);

// Binary posterior predictive matrix: entry (l, i) ~ Bernoulli of the inverse
// logit of draw l's linear predictor on row i.
Matrix posterior_predict(const PosteriorDraws& draws, const ModelSpec& spec,
                         const Matrix& newdata, int set_treatment, RngStream& rng);

// Overload with one treatment assignment per row of newdata.
Matrix posterior_predict(const PosteriorDraws& draws, const ModelSpec& spec,
                         const Matrix& newdata, const std::vector<int>& treatment,
                         RngStream& rng);

}  // namespace popadjust
