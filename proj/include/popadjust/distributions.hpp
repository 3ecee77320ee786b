#ifndef POPADJUST_DISTRIBUTIONS_HPP
#define POPADJUST_DISTRIBUTIONS_HPP

#include <cmath>

#include "popadjust/linalg.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

// ---- densities / cdfs / quantiles -----------------------------------------

double normal_pdf(double x);
double normal_cdf(double x);

/// Inverse standard normal cdf. Acklam's rational approximation refined by a
/// Newton step; absolute error far below 1e-9 across (0, 1). Throws
/// DomainError outside (0, 1).
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x) (series / continued fraction).
double gamma_p(double a, double x);

double gamma_pdf(double x, double shape, double scale);
double gamma_cdf(double x, double shape, double scale);
/// Inverse of gamma_cdf in x: Wilson-Hilferty start, safeguarded Newton.
double gamma_quantile(double p, double shape, double scale);

double chi_squared_cdf(double x, double nu);
double chi_squared_quantile(double p, double nu);

/// Regularized incomplete beta I_x(a, b) via the standard continued fraction.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double nu);
double student_t_quantile(double p, double nu);

inline double expit(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Throws DomainError unless p lies strictly inside (0, 1).
double logit(double p);

// ---- samplers --------------------------------------------------------------
//
// All samplers consume draws from RngStream only, in a fixed documented
// order, so sequences are bitwise reproducible for a given (seed, stream).

/// Standard normal by inversion (one uniform per draw).
double sample_normal(RngStream& rng);
double sample_normal(RngStream& rng, double mean, double sd);

/// Marsaglia-Tsang squeeze; shape < 1 handled by the boost u^(1/a) trick.
double sample_gamma(RngStream& rng, double shape, double scale);

/// Requires nu >= 1.
double sample_chi_squared(RngStream& rng, double nu);

/// Normal over sqrt(chi2/nu); requires nu >= 1.
double sample_student_t(RngStream& rng, double nu);

int sample_bernoulli(RngStream& rng, double p);
int sample_binomial(RngStream& rng, int n, double p);

/// n draws from MVN(mean, cov) via the Cholesky factor; one row per draw.
/// Propagates NotPosDefError from the factorization.
Matrix mvn_sample(const Vector& mean, const Matrix& cov, std::size_t n, RngStream& rng);

}  // namespace popadjust

#endif
