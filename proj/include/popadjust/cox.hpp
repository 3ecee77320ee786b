#ifndef POPADJUST_COX_HPP
#define POPADJUST_COX_HPP

#include <utility>

#include "popadjust/glm.hpp"

namespace popadjust {

/// Proportional hazards fit. The linear predictor is intercept-free with
/// layout [prognostic... | treatment | treatment x EM...]; the baseline
/// cumulative hazard is the Breslow step function over observed event times.
struct CoxFit {
  Vector coef;
  Matrix vcov;
  std::vector<std::pair<double, double>> cumhaz;  // (event time, H0), ascending
  bool converged = false;
  int iterations = 0;
  std::size_t n = 0;
  std::size_t n_events = 0;

  std::size_t n_prognostic = 0;
  std::size_t n_interactions = 0;
  bool has_treatment = true;

  double treatment_coef() const;
  double treatment_var() const;
};

/// Newton-Raphson on the Breslow partial likelihood; converges when the
/// score's max component is <= 1e-8. Monotone likelihoods (risk orderings
/// separable by the linear predictor) raise SeparationError; constant
/// covariates raise RankError. ModelSpec link/centers are ignored, the rest
/// of the layout applies.
CoxFit fit_cox(const ModelSpec& spec, const SurvivalData& data);

/// Breslow cumulative hazard at t; 0 before the first event time, error past
/// the last event time.
double baseline_cumhaz(const CoxFit& fit, double t);

/// Average survival at t over the rows of x_star with treatment forced:
/// mean_i exp(-H0(t) * exp(lp_i)).
double marginal_survival(const CoxFit& fit, const ModelSpec& spec, const Matrix& x_star,
                         int set_treatment, double t);

/// Marginal log hazard ratio at t: log(-log S1(t)) - log(-log S0(t)).
/// Undefined (error) while either marginal survival sits at 1 (or has
/// underflowed to 0).
double marginal_log_hr(const CoxFit& fit, const ModelSpec& spec, const Matrix& x_star, double t);

/// Series of (t, marginal log HR) over a time grid.
std::vector<std::pair<double, double>> marginal_log_hr_curve(const CoxFit& fit,
                                                             const ModelSpec& spec,
                                                             const Matrix& x_star,
                                                             const Vector& grid);

/// Default evaluation grid: deciles of the observed event times.
Vector default_time_grid(const CoxFit& fit);

}  // namespace popadjust

#endif
