#include "popadjust/indirect.hpp"

#include <cmath>
#include <string>

#include "popadjust/errors.hpp"

namespace popadjust {

EffectEstimate bc_log_or(double y_b, double n_b, double y_c, double n_c, bool continuity) {
  if (!(n_b > 0.0) || !(n_c > 0.0)) throw ValueError("bc_log_or: arm sizes must be positive");
  if (y_b < 0.0 || y_c < 0.0 || y_b > n_b || y_c > n_c)
    throw ValueError("bc_log_or: event counts must lie in [0, N]");

  double a = y_b;
  double b = n_b - y_b;
  double c = y_c;
  double d = n_c - y_c;
  if (continuity) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
  } else if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
    throw ZeroCellError("bc_log_or: zero cell in the 2x2 table");
  }

  EffectEstimate out;
  out.point = std::log(a * d / (b * c));
  out.variance = 1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d;
  out.estimand = Estimand::marginal;
  out.scale = EffectScale::log_odds_ratio;
  out.comparison = Comparison::b_vs_c;
  set_wald_interval(out);
  return out;
}

EffectEstimate bc_log_or(const AggregateData& ald, bool continuity) {
  return bc_log_or(ald.y_b, ald.n_b, ald.y_c, ald.n_c, continuity);
}

EffectEstimate bucher(const EffectEstimate& ac, const EffectEstimate& bc) {
  if (ac.scale != bc.scale)
    throw ScaleMismatchError(std::string("bucher: cannot combine ") +
                             effect_scale_name(ac.scale) + " with " + effect_scale_name(bc.scale));
  if (!(ac.variance >= 0.0) || !(bc.variance >= 0.0))
    throw ValueError("bucher: variances must be nonnegative");

  EffectEstimate out;
  out.point = ac.point - bc.point;
  out.variance = ac.variance + bc.variance;
  out.scale = ac.scale;
  out.comparison = Comparison::a_vs_b;
  out.estimand = Estimand::marginal;
  out.failed_resamples = ac.failed_resamples;
  out.total_resamples = ac.total_resamples;
  out.warning = ac.warning;
  if (ac.estimand == Estimand::conditional || bc.estimand == Estimand::conditional) {
    out.estimand = Estimand::conditional;
    if (!out.warning.empty()) out.warning += "; ";
    out.warning +=
        "bucher: conditional input in an anchored contrast; the result is not "
        "a population-level comparison";
  }
  set_wald_interval(out);
  return out;
}

}  // namespace popadjust
