#ifndef POPADJUST_GLM_HPP
#define POPADJUST_GLM_HPP

#include <optional>

#include "popadjust/data.hpp"

namespace popadjust {

enum class Link { logit, identity, log };

/// Describes an outcome regression over an IpdDataset's covariate columns:
/// which columns enter as prognostic terms, which of those interact with
/// treatment, and optional centering constants. The design matrix layout is
/// [intercept | prognostic... | treatment | treatment x EM...], with EM
/// interaction columns built from (x - center) when centers are supplied.
/// Centering a column is a pure reparameterization: it moves the treatment
/// coefficient (and intercept) but never the interaction or prognostic
/// coefficients.
struct ModelSpec {
  std::vector<std::size_t> prognostic;
  std::vector<std::size_t> effect_modifiers;
  Link link = Link::logit;
  bool include_treatment = true;
  std::optional<Vector> em_centers;          // one per effect_modifiers entry
  std::optional<Vector> prognostic_centers;  // one per prognostic entry

  std::size_t design_dim() const;
  void validate(std::size_t n_covariates) const;
};

struct GlmFit {
  Vector coef;
  Matrix vcov;
  double deviance = 0.0;
  double dispersion = 1.0;
  bool converged = false;
  int iterations = 0;
  std::size_t n = 0;

  // layout captured from the ModelSpec used for fitting
  std::size_t n_prognostic = 0;
  std::size_t n_interactions = 0;
  bool has_treatment = true;

  double intercept() const { return coef[0]; }
  double treatment_coef() const;
  double treatment_var() const;
  Vector prognostic_coefs() const;
  Vector interaction_coefs() const;
};

/// Fill one design row for subject i of x with treatment value z.
void design_row(const ModelSpec& spec, const Matrix& x, std::size_t i, double z, Vector& out);

Matrix build_design(const ModelSpec& spec, const Matrix& x, const std::vector<int>& treatment);

/// Iteratively reweighted least squares, canonical families per link
/// (binomial/logit, gaussian/identity, poisson/log). Optional prior weights
/// (quasi-likelihood; all-equal weights c rescale vcov by 1/c and leave
/// coefficients unchanged). Convergence on relative deviance change < 1e-10,
/// at most 100 iterations. Complete separation (|beta| > 30 or a logistic fit
/// that will not converge) raises SeparationError; rank-deficient designs
/// raise RankError. vcov is the inverse Fisher information scaled by the
/// dispersion (1 for binomial/poisson).
GlmFit fit_glm(const ModelSpec& spec, const IpdDataset& data, const Vector* weights = nullptr);

/// Mean response per row of newdata (full covariate-space matrix) with
/// treatment forced to set_treatment.
Vector predict_mean(const GlmFit& fit, const ModelSpec& spec, const Matrix& newdata,
                    int set_treatment);

double inverse_link(Link link, double eta);
double apply_link(Link link, double mu);

}  // namespace popadjust

#endif
