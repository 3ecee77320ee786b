#pragma once
#include <cstddef>

#include "popadjust/data.hpp"
#include "popadjust/linalg.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

// Method-of-moments weights for matching an IPD population onto reported
// effect-modifier means.
struct WeightFit {
  Vector alpha;    // one coefficient per effect modifier
  Vector weights;  // length N, strictly positive
  double ess = 0.0;
};

// Minimize sum_i exp((x_i - theta)' alpha); the optimum reweights x_em so its
// weighted means equal theta_em (to 1e-6 per component).
WeightFit estimate_weights(const Matrix& x_em, const Vector& theta_em);

struct MaicOptions {
  std::size_t boot_b = 1000;
  double failure_cap = 0.05;  // max tolerated fraction of failed resamples
};

// Bootstrap matching-adjusted comparison: every resample re-estimates weights
// and refits the weighted outcome model; the resample mean and SD give the
// point estimate and its standard error.
EffectEstimate maic_estimate(const IpdDataset& ipd, const AggregateData& ald,
                             const MaicOptions& opt, RngStream& rng);

}  // namespace popadjust
