#ifndef POPADJUST_OPTIMIZE_HPP
#define POPADJUST_OPTIMIZE_HPP

#include <functional>

#include "popadjust/linalg.hpp"

namespace popadjust {

struct ArgminResult {
  Vector argmin;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// BFGS quasi-Newton minimization with Armijo backtracking (c1 = 1e-4, step
/// shrink 0.5). Maintains the inverse-Hessian approximation, rescales it
/// after the first accepted step, and skips updates that violate the
/// curvature condition. Converged means grad 2-norm <= tol at the returned
/// point. Throws NumericalFailure when the objective is non-finite at the
/// start or everywhere along a backtracked line.
ArgminResult bfgs_minimize(const std::function<double(const Vector&)>& f,
                           const std::function<Vector(const Vector&)>& grad,
                           Vector x0, double tol = 1e-8, int max_iter = 500);

}  // namespace popadjust

#endif
