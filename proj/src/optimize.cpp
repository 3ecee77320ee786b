#include "popadjust/optimize.hpp"

#include <cmath>

namespace popadjust {

namespace {

// H <- (I - rho s y') H (I - rho y s') + rho s s'
void bfgs_update(Matrix& h, const Vector& s, const Vector& y, double rho) {
  const std::size_t n = s.size();
  Vector hy = matvec(h, y);
  double yhy = dot(y, hy);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      h(i, j) += rho * rho * yhy * s[i] * s[j] + rho * s[i] * s[j] -
                 rho * (s[i] * hy[j] + hy[i] * s[j]);
    }
  }
}

}  // namespace

ArgminResult bfgs_minimize(const std::function<double(const Vector&)>& f,
                           const std::function<Vector(const Vector&)>& grad,
                           Vector x0, double tol, int max_iter) {
  const std::size_t n = x0.size();
  if (n == 0) throw ShapeError("bfgs_minimize: empty start point");

  Vector x = std::move(x0);
  double fx = f(x);
  if (!std::isfinite(fx)) throw NumericalFailure("bfgs_minimize: objective not finite at start");
  Vector g = grad(x);

  Matrix h = Matrix::identity(n);
  bool scaled = false;
  const double c1 = 1e-4;

  ArgminResult res;
  for (int iter = 0; iter < max_iter; ++iter) {
    double gn = norm2(g);
    if (gn <= tol) {
      res.argmin = x;
      res.value = fx;
      res.converged = true;
      res.iterations = iter;
      res.grad_norm = gn;
      return res;
    }

    Vector d = -1.0 * matvec(h, g);
    double slope = dot(g, d);
    if (!(slope < 0.0)) {  // not a descent direction, reset
      h = Matrix::identity(n);
      scaled = false;
      d = -1.0 * g;
      slope = -gn * gn;
    }

    // Line search: try the one-shot quadratic interpolation step first (it is
    // the exact line minimum whenever the objective is quadratic along d, which
    // preserves BFGS's finite termination on quadratics), then fall back to
    // Armijo backtracking from the unit step.
    bool accepted = false;
    bool saw_nonfinite = false;
    double step = 1.0;
    double fnew = 0.0;
    Vector xnew;

    double f1 = f(x + d);
    if (std::isfinite(f1)) {
      double curv = 2.0 * (f1 - fx - slope);
      if (curv > 0.0) {
        double tq = -slope / curv;
        if (tq > 1e-12 && tq < 100.0) {
          Vector xq = x + tq * d;
          double fq = f(xq);
          if (std::isfinite(fq) && fq <= fx + c1 * tq * slope &&
              (fq <= f1 || !(f1 <= fx + c1 * slope))) {
            accepted = true;
            step = tq;
            fnew = fq;
            xnew = std::move(xq);
          }
        }
      }
      if (!accepted && f1 <= fx + c1 * slope) {
        accepted = true;
        step = 1.0;
        fnew = f1;
        xnew = x + d;
      }
    } else {
      saw_nonfinite = true;
    }

    if (!accepted) {
      step = 0.5;
      for (;;) {
        xnew = x + step * d;
        fnew = f(xnew);
        if (std::isfinite(fnew) && fnew <= fx + c1 * step * slope) break;
        if (!std::isfinite(fnew)) saw_nonfinite = true;
        step *= 0.5;
        if (step < 1e-20) {
          if (saw_nonfinite)
            throw NumericalFailure("bfgs_minimize: objective not finite along search line");
          res.argmin = x;
          res.value = fx;
          res.converged = false;
          res.iterations = iter;
          res.grad_norm = gn;
          return res;
        }
      }
    }

    Vector gnew = grad(xnew);
    Vector s = xnew - x;
    Vector y = gnew - g;
    double sy = dot(s, y);
    if (!scaled && sy > 0.0) {
      // Initial scaling so the first update starts from a sane curvature
      double yy = dot(y, y);
      if (yy > 0.0) {
        double gamma = sy / yy;
        for (std::size_t i = 0; i < n; ++i) h(i, i) = gamma;
        scaled = true;
      }
    }
    if (sy > 1e-12 * norm2(s) * norm2(y)) bfgs_update(h, s, y, 1.0 / sy);

    x = std::move(xnew);
    fx = fnew;
    g = std::move(gnew);
  }

  res.argmin = x;
  res.value = fx;
  res.converged = norm2(g) <= tol;
  res.iterations = max_iter;
  res.grad_norm = norm2(g);
  return res;
}

}  // namespace popadjust
