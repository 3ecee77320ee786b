#include "popadjust/distributions.hpp"

#include <cmath>
#include <limits>

namespace popadjust {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kPi = 3.141592653589793;

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p outside (0,1)");

  // Acklam 2003 rational approximation (relative error ~1e-9), then one
  // Newton step against the erfc-based cdf to push well past 1e-12.
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double dens = normal_pdf(x);
  if (dens > 1e-280) x -= (normal_cdf(x) - p) / dens;
  return x;
}

namespace {

// Regularized lower incomplete gamma, series branch (x < a + 1).
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Complement via Lentz continued fraction (x >= a + 1).
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_p: shape must be positive");
  if (x < 0.0) throw DomainError("gamma_p: x negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_pdf(double x, double shape, double scale) {
  if (!(shape > 0.0 && scale > 0.0)) throw DomainError("gamma_pdf: bad parameters");
  if (x < 0.0) return 0.0;
  if (x == 0.0) return shape < 1.0 ? std::numeric_limits<double>::infinity()
                                   : (shape == 1.0 ? 1.0 / scale : 0.0);
  double lg = (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
              shape * std::log(scale);
  return std::exp(lg);
}

double gamma_cdf(double x, double shape, double scale) {
  if (!(shape > 0.0 && scale > 0.0)) throw DomainError("gamma_cdf: bad parameters");
  if (x <= 0.0) return 0.0;
  return gamma_p(shape, x / scale);
}

double gamma_quantile(double p, double shape, double scale) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("gamma_quantile: p outside (0,1)");
  if (!(shape > 0.0 && scale > 0.0)) throw DomainError("gamma_quantile: bad parameters");

  // Wilson-Hilferty start in the chi-squared parameterization.
  double nu = 2.0 * shape;
  double z = normal_quantile(p);
  double t = 1.0 - 2.0 / (9.0 * nu) + z * std::sqrt(2.0 / (9.0 * nu));
  double x = nu * t * t * t / 2.0;  // gamma(shape, 1) scale
  if (!(x > 0.0)) x = 0.5 * shape * p;

  // bracket
  double lo = 0.0;
  double hi = std::max(x * 4.0, shape + 10.0);
  while (gamma_p(shape, hi) < p) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  // safeguarded Newton on P(shape, x) - p
  for (int it = 0; it < 200; ++it) {
    double f = gamma_p(shape, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    double dens = gamma_pdf(x, shape, 1.0);
    double step = dens > 0.0 ? f / dens : 0.0;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-14 * (std::fabs(x) + 1e-14)) {
      x = next;
      break;
    }
    x = next;
  }
  return x * scale;
}

double chi_squared_cdf(double x, double nu) {
  if (!(nu >= 1.0)) throw DomainError("chi_squared_cdf: nu must be >= 1");
  return gamma_cdf(x, nu / 2.0, 2.0);
}

double chi_squared_quantile(double p, double nu) {
  if (!(nu >= 1.0)) throw DomainError("chi_squared_quantile: nu must be >= 1");
  return gamma_quantile(p, nu / 2.0, 2.0);
}

namespace {

double beta_contfrac(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete_beta: bad parameters");
  if (x < 0.0 || x > 1.0) throw DomainError("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  double front = std::exp(lbeta + a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_contfrac(a, b, x) / a;
  return 1.0 - front * beta_contfrac(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
  if (!(nu > 0.0)) throw DomainError("student_t_cdf: nu must be positive");
  if (t == 0.0) return 0.5;
  double x = nu / (nu + t * t);
  double tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p outside (0,1)");
  if (!(nu > 0.0)) throw DomainError("student_t_quantile: nu must be positive");
  if (p == 0.5) return 0.0;
  bool upper = p > 0.5;
  double pp = upper ? p : 1.0 - p;  // work in the upper half
  // start from the normal quantile, expand bracket as needed
  double t = normal_quantile(pp);
  if (!(t > 0.0)) t = 0.5;
  double lo = 0.0, hi = t;
  while (student_t_cdf(hi, nu) < pp) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) break;
  }
  t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double f = student_t_cdf(t, nu) - pp;
    if (f > 0.0)
      hi = t;
    else
      lo = t;
    // t density
    double lpdf = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                  0.5 * std::log(nu * kPi) -
                  (nu + 1.0) / 2.0 * std::log1p(t * t / nu);
    double dens = std::exp(lpdf);
    double next = dens > 0.0 ? t - f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - t) <= 1e-13 * (std::fabs(t) + 1e-13)) {
      t = next;
      break;
    }
    t = next;
  }
  return upper ? t : -t;
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit: p outside (0,1)");
  return std::log(p / (1.0 - p));
}

double sample_normal(RngStream& rng) { return normal_quantile(rng.uniform()); }

double sample_normal(RngStream& rng, double mean, double sd) {
  if (!(sd >= 0.0)) throw DomainError("sample_normal: negative sd");
  return mean + sd * sample_normal(rng);
}

double sample_gamma(RngStream& rng, double shape, double scale) {
  if (!(shape > 0.0 && scale > 0.0)) throw DomainError("sample_gamma: bad parameters");
  if (shape < 1.0) {
    // boost: gamma(a) = gamma(a+1) * u^(1/a)
    double u = rng.uniform();
    return sample_gamma(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = sample_normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
  }
}

double sample_chi_squared(RngStream& rng, double nu) {
  if (!(nu >= 1.0)) throw DomainError("sample_chi_squared: nu must be >= 1");
  return sample_gamma(rng, nu / 2.0, 2.0);
}

double sample_student_t(RngStream& rng, double nu) {
  if (!(nu >= 1.0)) throw DomainError("sample_student_t: nu must be >= 1");
  double z = sample_normal(rng);
  double c = sample_chi_squared(rng, nu);
  return z / std::sqrt(c / nu);
}

int sample_bernoulli(RngStream& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("sample_bernoulli: p outside [0,1]");
  return rng.uniform() < p ? 1 : 0;
}

int sample_binomial(RngStream& rng, int n, double p) {
  if (n < 0) throw DomainError("sample_binomial: n negative");
  int s = 0;
  for (int i = 0; i < n; ++i) s += sample_bernoulli(rng, p);
  return s;
}

Matrix mvn_sample(const Vector& mean, const Matrix& cov, std::size_t n, RngStream& rng) {
  const std::size_t k = mean.size();
  if (cov.rows() != k || cov.cols() != k) throw ShapeError("mvn_sample: cov shape mismatch");
  Matrix chol_lower = cholesky(cov);
  Matrix out(n, k);
  Vector z(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) z[j] = sample_normal(rng);
    for (std::size_t r = 0; r < k; ++r) {
      double s = mean[r];
      for (std::size_t c = 0; c <= r; ++c) s += chol_lower(r, c) * z[c];
      out(i, r) = s;
    }
  }
  return out;
}

}  // namespace popadjust
