#pragma once
#include "popadjust/data.hpp"

namespace popadjust {

struct StcOptions {
  // default centers effect modifiers inside interaction terms only; enabling
  // this also centers every prognostic main term at the reported means
  bool center_prognostic = false;
};

// Covariate-adjusted regression with effect-modifier interactions centered at
// the reported comparator means; the treatment coefficient is returned as-is
// and therefore keeps its conditional interpretation.
EffectEstimate stc_estimate(const IpdDataset& ipd, const AggregateData& ald,
                            const StcOptions& opt = {});

}  // namespace popadjust
