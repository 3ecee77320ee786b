#include "popadjust/data.hpp"

#include <cmath>

#include "popadjust/errors.hpp"

namespace popadjust {

void IpdDataset::validate() const {
  if (treatment.size() != n() || y.size() != n())
    throw ShapeError("IpdDataset: column lengths disagree");
  if (n() == 0) throw ValueError("IpdDataset: no rows");
  for (std::size_t i = 0; i < n(); ++i) {
    if (treatment[i] != 0 && treatment[i] != 1)
      throw ValueError("IpdDataset: treatment must be 0/1");
    if (y[i] != 0 && y[i] != 1) throw ValueError("IpdDataset: outcome must be 0/1");
  }
  for (double v : x.data())
    if (!std::isfinite(v)) throw ValueError("IpdDataset: non-finite covariate");
}

void SurvivalData::validate() const {
  if (treatment.size() != n() || time.size() != n() || event.size() != n())
    throw ShapeError("SurvivalData: column lengths disagree");
  if (n() == 0) throw ValueError("SurvivalData: no rows");
  bool any_event = false;
  for (std::size_t i = 0; i < n(); ++i) {
    if (treatment[i] != 0 && treatment[i] != 1)
      throw ValueError("SurvivalData: treatment must be 0/1");
    if (event[i] != 0 && event[i] != 1) throw ValueError("SurvivalData: event must be 0/1");
    if (!(time[i] > 0.0)) throw ValueError("SurvivalData: times must be positive");
    if (event[i] == 1) any_event = true;
  }
  if (!any_event) throw ValueError("SurvivalData: no events observed");
}

std::vector<std::size_t> AggregateData::em_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < effect_modifier.size(); ++j)
    if (effect_modifier[j]) idx.push_back(j);
  return idx;
}

void AggregateData::validate() const {
  if (sds.size() != means.size())
    throw ShapeError("AggregateData: means/sds length mismatch");
  if (!effect_modifier.empty() && effect_modifier.size() != means.size())
    throw ShapeError("AggregateData: effect-modifier flags length mismatch");
  for (double s : sds)
    if (!(s > 0.0)) throw ValueError("AggregateData: SDs must be positive");
  if (n_b <= 0.0 || n_c <= 0.0) throw ValueError("AggregateData: arm sizes must be positive");
  if (y_b < 0.0 || y_c < 0.0 || y_b > n_b || y_c > n_c)
    throw ValueError("AggregateData: event counts outside [0, N]");
}

const char* estimand_name(Estimand e) {
  return e == Estimand::marginal ? "marginal" : "conditional";
}

const char* effect_scale_name(EffectScale s) {
  return s == EffectScale::log_odds_ratio ? "log-OR" : "log-HR";
}

const char* comparison_name(Comparison c) {
  switch (c) {
    case Comparison::a_vs_c: return "A vs C";
    case Comparison::b_vs_c: return "B vs C";
    default: return "A vs B";
  }
}

void set_wald_interval(EffectEstimate& est) {
  double half = kZ975 * std::sqrt(est.variance);
  est.ci_lower = est.point - half;
  est.ci_upper = est.point + half;
}

}  // namespace popadjust
