#include "popadjust/stc.hpp"

#include "popadjust/errors.hpp"
#include "popadjust/glm.hpp"

namespace popadjust {

EffectEstimate stc_estimate(const IpdDataset& ipd, const AggregateData& ald,
                            const StcOptions& opt) {
  ipd.validate();
  ald.validate();
  if (ald.means.size() != ipd.k())
    throw ShapeError("stc_estimate: aggregate covariate count does not match IPD");
  if (ipd.k() == 0) throw ConfigError("stc_estimate: no covariates to adjust for");

  ModelSpec spec;
  spec.link = Link::logit;
  spec.include_treatment = true;
  for (std::size_t j = 0; j < ipd.k(); ++j) spec.prognostic.push_back(j);
  spec.effect_modifiers = ald.em_indices();

  Vector centers;
  for (std::size_t j : spec.effect_modifiers) centers.push_back(ald.means[j]);
  spec.em_centers = centers;
  if (opt.center_prognostic) spec.prognostic_centers = ald.means;

  GlmFit fit = fit_glm(spec, ipd);

  EffectEstimate out;
  out.point = fit.treatment_coef();
  out.variance = fit.treatment_var();
  out.estimand = Estimand::conditional;
  out.scale = EffectScale::log_odds_ratio;
  out.comparison = Comparison::a_vs_c;
  set_wald_interval(out);
  return out;
}

}  // namespace popadjust
