#pragma once
#include <cstddef>
#include <vector>

#include "popadjust/data.hpp"
#include "popadjust/glm.hpp"
#include "popadjust/linalg.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

// Marginal distribution families available for pseudo-population covariates.
enum class MarginalFamily { normal, lognormal, gamma, bernoulli, truncated_normal };

const char* marginal_family_name(MarginalFamily f);

struct MarginalSpec {
  MarginalFamily family = MarginalFamily::normal;
  // normal / lognormal / gamma / truncated_normal are parameterized by the
  // target mean and SD on the natural scale (lognormal and gamma are
  // moment-matched); bernoulli uses `proportion`.
  double mean = 0.0;
  double sd = 1.0;
  double proportion = 0.5;
  // truncation bounds, used by truncated_normal only
  double lower = 0.0;
  double upper = 0.0;

  void validate() const;
};

// Inverse CDF of the marginal, u in (0,1).
double marginal_quantile(const MarginalSpec& spec, double u);

struct PopulationSpec {
  std::vector<MarginalSpec> marginals;
  Matrix correlation;  // K x K latent Gaussian correlation
  std::size_t n_star = 1000;

  std::size_t k() const { return marginals.size(); }
  void validate() const;
};

// Convenience constructor: independent-or-correlated normal marginals from
// reported means and SDs.
PopulationSpec normal_population(const Vector& means, const Vector& sds,
                                 const Matrix& correlation, std::size_t n_star);

// Draw an N* x K covariate matrix through a Gaussian copula: z ~ MVN(0, rho),
// u = Phi(z), x_k = F_k^{-1}(u_k).
Matrix synthesize_copula(const PopulationSpec& spec, RngStream& rng);

// Pairwise Pearson correlations of the covariate columns, unit diagonal.
Matrix infer_correlation(const IpdDataset& ipd);

// Factorized simulation: each node is drawn from its marginal, or — when it
// has regression terms — from a conditional model on previously drawn nodes.
struct ChainTerm {
  std::size_t parent = 0;
  double coef = 0.0;
  double center = 0.0;
};

struct ChainNode {
  MarginalSpec marginal;  // family and scale parameters
  Link link = Link::identity;
  double intercept = 0.0;
  std::vector<ChainTerm> terms;  // empty -> plain marginal draw
};

struct FactorizedChain {
  std::vector<ChainNode> nodes;

  std::size_t k() const { return nodes.size(); }
  void validate() const;
};

Matrix synthesize_factorized(const FactorizedChain& chain, std::size_t n, RngStream& rng);

}  // namespace popadjust
