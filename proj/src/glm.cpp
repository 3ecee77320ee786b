#include "popadjust/glm.hpp"

#include <algorithm>
#include <cmath>

#include "popadjust/distributions.hpp"

namespace popadjust {

std::size_t ModelSpec::design_dim() const {
  return 1 + prognostic.size() + (include_treatment ? 1 : 0) + effect_modifiers.size();
}

void ModelSpec::validate(std::size_t n_covariates) const {
  for (std::size_t j : prognostic)
    if (j >= n_covariates) throw ShapeError("ModelSpec: prognostic index out of range");
  for (std::size_t j : effect_modifiers) {
    if (j >= n_covariates) throw ShapeError("ModelSpec: effect-modifier index out of range");
    if (std::find(prognostic.begin(), prognostic.end(), j) == prognostic.end())
      throw ConfigError("ModelSpec: effect modifiers must be a subset of prognostic columns");
  }
  if (!effect_modifiers.empty() && !include_treatment)
    throw ConfigError("ModelSpec: interactions require a treatment term");
  if (em_centers && em_centers->size() != effect_modifiers.size())
    throw ShapeError("ModelSpec: em_centers length mismatch");
  if (prognostic_centers && prognostic_centers->size() != prognostic.size())
    throw ShapeError("ModelSpec: prognostic_centers length mismatch");
}

double GlmFit::treatment_coef() const {
  if (!has_treatment) throw ConfigError("GlmFit: model has no treatment term");
  return coef[1 + n_prognostic];
}

double GlmFit::treatment_var() const {
  if (!has_treatment) throw ConfigError("GlmFit: model has no treatment term");
  std::size_t j = 1 + n_prognostic;
  return vcov(j, j);
}

Vector GlmFit::prognostic_coefs() const {
  return Vector(coef.begin() + 1, coef.begin() + 1 + n_prognostic);
}

Vector GlmFit::interaction_coefs() const {
  std::size_t start = 1 + n_prognostic + (has_treatment ? 1 : 0);
  return Vector(coef.begin() + start, coef.end());
}

void design_row(const ModelSpec& spec, const Matrix& x, std::size_t i, double z, Vector& out) {
  out.resize(spec.design_dim());
  std::size_t c = 0;
  out[c++] = 1.0;
  for (std::size_t p = 0; p < spec.prognostic.size(); ++p) {
    double center = spec.prognostic_centers ? (*spec.prognostic_centers)[p] : 0.0;
    out[c++] = x(i, spec.prognostic[p]) - center;
  }
  if (spec.include_treatment) out[c++] = z;
  for (std::size_t e = 0; e < spec.effect_modifiers.size(); ++e) {
    double center = spec.em_centers ? (*spec.em_centers)[e] : 0.0;
    out[c++] = z * (x(i, spec.effect_modifiers[e]) - center);
  }
}

Matrix build_design(const ModelSpec& spec, const Matrix& x, const std::vector<int>& treatment) {
  if (treatment.size() != x.rows()) throw ShapeError("build_design: treatment length mismatch");
  Matrix out(x.rows(), spec.design_dim());
  Vector row;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    design_row(spec, x, i, static_cast<double>(treatment[i]), row);
    for (std::size_t j = 0; j < row.size(); ++j) out(i, j) = row[j];
  }
  return out;
}

double inverse_link(Link link, double eta) {
  switch (link) {
    case Link::logit: return expit(eta);
    case Link::identity: return eta;
    default: return std::exp(eta);
  }
}

double apply_link(Link link, double mu) {
  switch (link) {
    case Link::logit: return logit(mu);
    case Link::identity: return mu;
    default:
      if (!(mu > 0.0)) throw DomainError("log link: mean must be positive");
      return std::log(mu);
  }
}

namespace {

constexpr double kSeparationBound = 30.0;
constexpr int kMaxIrls = 100;

double deviance_for(Link link, const Vector& y, const Vector& mu, const Vector& w) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    switch (link) {
      case Link::logit: {
        double m = std::min(1.0 - 1e-12, std::max(1e-12, mu[i]));
        dev += -2.0 * w[i] * (y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m));
        break;
      }
      case Link::identity:
        dev += w[i] * (y[i] - mu[i]) * (y[i] - mu[i]);
        break;
      default: {
        double term = y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) - (y[i] - mu[i]) : mu[i];
        dev += 2.0 * w[i] * term;
        break;
      }
    }
  }
  return dev;
}

}  // namespace

GlmFit fit_glm(const ModelSpec& spec, const IpdDataset& data, const Vector* weights) {
  data.validate();
  spec.validate(data.k());
  const std::size_t n = data.n();
  const std::size_t p = spec.design_dim();
  if (n < p) throw RankError("fit_glm: fewer rows than parameters");

  Vector w(n, 1.0);
  if (weights) {
    if (weights->size() != n) throw ShapeError("fit_glm: weights length mismatch");
    double total = 0.0;
    for (double v : *weights) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValueError("fit_glm: weights must be >= 0");
      total += v;
    }
    if (!(total > 0.0)) throw ValueError("fit_glm: weights sum to zero");
    w = *weights;
  }

  Matrix x = build_design(spec, data.x, data.treatment);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(data.y[i]);

  Vector beta(p, 0.0);
  Vector eta(n, 0.0), mu(n), irls_w(n), zwork(n);
  double dev = 0.0;
  GlmFit fit;

  for (int iter = 0; iter < kMaxIrls; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = inverse_link(spec.link, eta[i]);
      double dmu;
      switch (spec.link) {
        case Link::logit: {
          double m = std::min(1.0 - 1e-10, std::max(1e-10, mu[i]));
          dmu = m * (1.0 - m);
          irls_w[i] = w[i] * dmu;
          break;
        }
        case Link::identity:
          dmu = 1.0;
          irls_w[i] = w[i];
          break;
        default:
          dmu = std::max(mu[i], 1e-10);
          irls_w[i] = w[i] * dmu;
          break;
      }
      zwork[i] = eta[i] + (y[i] - mu[i]) / dmu;
    }

    // weighted normal equations
    Matrix xtwx(p, p);
    Vector xtwz(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = x.row_ptr(i);
      double wi = irls_w[i];
      if (wi == 0.0) continue;
      for (std::size_t a = 0; a < p; ++a) {
        double ra = wi * row[a];
        xtwz[a] += ra * zwork[i];
        for (std::size_t b = a; b < p; ++b) xtwx(a, b) += ra * row[b];
      }
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) xtwx(a, b) = xtwx(b, a);

    Vector beta_new;
    try {
      beta_new = spd_solve(xtwx, xtwz);
    } catch (const NotPosDefError&) {
      if (iter == 0) throw RankError("fit_glm: design is rank deficient");
      if (spec.link == Link::logit)
        throw SeparationError("fit_glm: information matrix collapsed (separation)");
      throw NumericalFailure("fit_glm: information matrix not positive definite");
    }

    Vector eta_new = matvec(x, beta_new);
    Vector mu_new(n);
    for (std::size_t i = 0; i < n; ++i) mu_new[i] = inverse_link(spec.link, eta_new[i]);
    double dev_new = deviance_for(spec.link, y, mu_new, w);

    if (iter > 0 && std::isfinite(dev)) {
      // step-halve toward the previous iterate if the deviance got worse
      int halvings = 0;
      while ((!std::isfinite(dev_new) || dev_new > dev * (1.0 + 1e-12)) && halvings < 30) {
        for (std::size_t j = 0; j < p; ++j) beta_new[j] = 0.5 * (beta_new[j] + beta[j]);
        eta_new = matvec(x, beta_new);
        for (std::size_t i = 0; i < n; ++i) mu_new[i] = inverse_link(spec.link, eta_new[i]);
        dev_new = deviance_for(spec.link, y, mu_new, w);
        ++halvings;
      }
    }

    double max_beta = norm_inf(beta_new);
    if (spec.link == Link::logit && max_beta > kSeparationBound)
      throw SeparationError("fit_glm: coefficients diverging (separation)");

    bool done = std::isfinite(dev_new) && iter > 0 &&
                std::fabs(dev_new - dev) < 1e-10 * (std::fabs(dev_new) + 0.1);
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    dev = dev_new;
    fit.iterations = iter + 1;

    if (done || spec.link == Link::identity) {
      fit.converged = true;
      break;
    }
  }

  if (!fit.converged) {
    if (spec.link == Link::logit)
      throw SeparationError("fit_glm: IRLS did not converge (treated as separation)");
    throw NumericalFailure("fit_glm: IRLS did not converge");
  }

  // Fisher information at the solution
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = inverse_link(spec.link, eta[i]);
    switch (spec.link) {
      case Link::logit: {
        double m = std::min(1.0 - 1e-10, std::max(1e-10, mu[i]));
        irls_w[i] = w[i] * m * (1.0 - m);
        break;
      }
      case Link::identity:
        irls_w[i] = w[i];
        break;
      default:
        irls_w[i] = w[i] * std::max(mu[i], 1e-10);
        break;
    }
  }
  Matrix xtwx(p, p);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row_ptr(i);
    double wi = irls_w[i];
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) xtwx(a, b) += wi * row[a] * row[b];
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < a; ++b) xtwx(a, b) = xtwx(b, a);

  fit.dispersion = 1.0;
  if (spec.link == Link::identity) {
    double rss = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rss += w[i] * (y[i] - mu[i]) * (y[i] - mu[i]);
      wsum += w[i] > 0.0 ? 1.0 : 0.0;
    }
    fit.dispersion = rss / std::max(1.0, wsum - static_cast<double>(p));
  }

  fit.vcov = spd_inverse(xtwx);
  if (fit.dispersion != 1.0)
    for (auto& v : fit.vcov.data()) v *= fit.dispersion;

  fit.coef = std::move(beta);
  fit.deviance = dev;
  fit.n = n;
  fit.n_prognostic = spec.prognostic.size();
  fit.n_interactions = spec.effect_modifiers.size();
  fit.has_treatment = spec.include_treatment;
  return fit;
}

Vector predict_mean(const GlmFit& fit, const ModelSpec& spec, const Matrix& newdata,
                    int set_treatment) {
  spec.validate(newdata.cols());
  if (fit.coef.size() != spec.design_dim())
    throw ShapeError("predict_mean: fit and spec dimensions disagree");
  if (set_treatment != 0 && set_treatment != 1)
    throw ValueError("predict_mean: treatment must be 0 or 1");
  Vector out(newdata.rows());
  Vector row;
  for (std::size_t i = 0; i < newdata.rows(); ++i) {
    design_row(spec, newdata, i, static_cast<double>(set_treatment), row);
    out[i] = inverse_link(spec.link, dot(row, fit.coef));
  }
  return out;
}

}  // namespace popadjust
