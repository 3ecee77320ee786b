#include "popadjust/population.hpp"

#include <cmath>

#include "popadjust/distributions.hpp"
#include "popadjust/errors.hpp"

namespace popadjust {

const char* marginal_family_name(MarginalFamily f) {
  switch (f) {
    case MarginalFamily::normal: return "normal";
    case MarginalFamily::lognormal: return "lognormal";
    case MarginalFamily::gamma: return "gamma";
    case MarginalFamily::bernoulli: return "bernoulli";
    case MarginalFamily::truncated_normal: return "truncated-normal";
  }
  return "?";
}

void MarginalSpec::validate() const {
  switch (family) {
    case MarginalFamily::bernoulli:
      if (!(proportion > 0.0 && proportion < 1.0))
        throw ValueError("MarginalSpec: bernoulli proportion must lie in (0,1)");
      return;
    case MarginalFamily::lognormal:
    case MarginalFamily::gamma:
      if (!(mean > 0.0))
        throw ValueError("MarginalSpec: positive-support family needs mean > 0");
      [[fallthrough]];
    case MarginalFamily::normal:
      if (!(sd > 0.0)) throw ValueError("MarginalSpec: sd must be positive");
      return;
    case MarginalFamily::truncated_normal:
      if (!(sd > 0.0)) throw ValueError("MarginalSpec: sd must be positive");
      if (!(lower < upper))
        throw ValueError("MarginalSpec: truncation needs lower < upper");
      return;
  }
}

double marginal_quantile(const MarginalSpec& spec, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("marginal_quantile: u outside (0,1)");
  switch (spec.family) {
    case MarginalFamily::normal:
      return spec.mean + spec.sd * normal_quantile(u);
    case MarginalFamily::lognormal: {
      // match the requested natural-scale mean and SD
      double s2 = std::log(1.0 + (spec.sd * spec.sd) / (spec.mean * spec.mean));
      double mu = std::log(spec.mean) - 0.5 * s2;
      return std::exp(mu + std::sqrt(s2) * normal_quantile(u));
    }
    case MarginalFamily::gamma: {
      double shape = (spec.mean * spec.mean) / (spec.sd * spec.sd);
      double scale = (spec.sd * spec.sd) / spec.mean;
      return gamma_quantile(u, shape, scale);
    }
    case MarginalFamily::bernoulli:
      return u <= 1.0 - spec.proportion ? 0.0 : 1.0;
    case MarginalFamily::truncated_normal: {
      double a = (spec.lower - spec.mean) / spec.sd;
      double b = (spec.upper - spec.mean) / spec.sd;
      double fa = normal_cdf(a);
      double fb = normal_cdf(b);
      double q = normal_quantile(fa + u * (fb - fa));
      // inversion through the tails can overshoot by an ulp
      q = std::min(std::max(q, a), b);
      return spec.mean + spec.sd * q;
    }
  }
  throw DomainError("marginal_quantile: unknown family");
}

void PopulationSpec::validate() const {
  if (marginals.empty()) throw ConfigError("PopulationSpec: no marginals");
  for (const auto& m : marginals) m.validate();
  const std::size_t kk = marginals.size();
  if (correlation.rows() != kk || correlation.cols() != kk)
    throw ShapeError("PopulationSpec: correlation must be K x K");
  for (std::size_t i = 0; i < kk; ++i) {
    if (std::fabs(correlation(i, i) - 1.0) > 1e-12)
      throw ValueError("PopulationSpec: correlation diagonal must be 1");
    for (std::size_t j = 0; j < i; ++j)
      if (std::fabs(correlation(i, j) - correlation(j, i)) > 1e-12)
        throw ValueError("PopulationSpec: correlation must be symmetric");
  }
  if (n_star == 0) throw ConfigError("PopulationSpec: n_star must be positive");
}

PopulationSpec normal_population(const Vector& means, const Vector& sds,
                                 const Matrix& correlation, std::size_t n_star) {
  if (means.size() != sds.size())
    throw ShapeError("normal_population: means and sds length mismatch");
  PopulationSpec spec;
  spec.n_star = n_star;
  spec.correlation = correlation;
  for (std::size_t j = 0; j < means.size(); ++j) {
    MarginalSpec m;
    m.family = MarginalFamily::normal;
    m.mean = means[j];
    m.sd = sds[j];
    spec.marginals.push_back(m);
  }
  return spec;
}

Matrix synthesize_copula(const PopulationSpec& spec, RngStream& rng) {
  spec.validate();
  const std::size_t kk = spec.k();
  Matrix chol = cholesky(spec.correlation);  // NotPosDef propagates
  Matrix x(spec.n_star, kk);
  Vector z(kk);
  for (std::size_t i = 0; i < spec.n_star; ++i) {
    for (std::size_t j = 0; j < kk; ++j) z[j] = sample_normal(rng);
    for (std::size_t j = kk; j-- > 0;) {
      double acc = 0.0;
      for (std::size_t l = 0; l <= j; ++l) acc += chol(j, l) * z[l];
      double u = normal_cdf(acc);
      // keep strictly inside (0,1) for the inverse CDFs
      u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
      x(i, j) = marginal_quantile(spec.marginals[j], u);
    }
  }
  return x;
}

Matrix infer_correlation(const IpdDataset& ipd) {
  ipd.validate();
  const std::size_t n = ipd.n();
  const std::size_t kk = ipd.k();
  if (n < 2) throw ShapeError("infer_correlation: need at least 2 rows");
  Vector mean(kk, 0.0), ss(kk, 0.0);
  for (std::size_t j = 0; j < kk; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += ipd.x(i, j);
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      double c = ipd.x(i, j) - mean[j];
      ss[j] += c * c;
    }
    if (!(ss[j] > 0.0))
      throw DegenerateCovariateError("infer_correlation: constant covariate column " +
                                     std::to_string(j));
  }
  Matrix r = Matrix::identity(kk);
  for (std::size_t a = 0; a < kk; ++a)
    for (std::size_t b = a + 1; b < kk; ++b) {
      double cross = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        cross += (ipd.x(i, a) - mean[a]) * (ipd.x(i, b) - mean[b]);
      r(a, b) = r(b, a) = cross / std::sqrt(ss[a] * ss[b]);
    }
  return r;
}

void FactorizedChain::validate() const {
  if (nodes.empty()) throw ConfigError("FactorizedChain: no nodes");
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const ChainNode& node = nodes[j];
    for (const ChainTerm& t : node.terms)
      if (t.parent >= j)
        throw ConfigError("FactorizedChain: node " + std::to_string(j) +
                          " references a non-ancestor node");
    if (node.terms.empty()) {
      node.marginal.validate();
    } else if (node.marginal.family == MarginalFamily::normal) {
      if (!(node.marginal.sd > 0.0))
        throw ValueError("FactorizedChain: conditional normal needs sd > 0");
    } else if (node.marginal.family != MarginalFamily::bernoulli) {
      throw ConfigError("FactorizedChain: conditional nodes support normal and bernoulli only");
    }
  }
}

Matrix synthesize_factorized(const FactorizedChain& chain, std::size_t n, RngStream& rng) {
  chain.validate();
  if (n == 0) throw ConfigError("synthesize_factorized: n must be positive");
  const std::size_t kk = chain.k();
  Matrix x(n, kk);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kk; ++j) {
      const ChainNode& node = chain.nodes[j];
      if (node.terms.empty()) {
        x(i, j) = marginal_quantile(node.marginal, rng.uniform());
        continue;
      }
      double eta = node.intercept;
      for (const ChainTerm& t : node.terms) eta += t.coef * (x(i, t.parent) - t.center);
      double m = inverse_link(node.link, eta);
      if (node.marginal.family == MarginalFamily::bernoulli) {
        if (!(m >= 0.0 && m <= 1.0))
          throw DomainError("synthesize_factorized: conditional bernoulli mean outside [0,1]");
        x(i, j) = sample_bernoulli(rng, m) ? 1.0 : 0.0;
      } else {
        x(i, j) = m + node.marginal.sd * sample_normal(rng);
      }
    }
  }
  return x;
}

}  // namespace popadjust
