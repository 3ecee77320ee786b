#pragma once
#include "popadjust/data.hpp"

namespace popadjust {

// Log odds ratio of B vs C from aggregate event counts, with the delta-method
// variance 1/y_C + 1/(N_C - y_C) + 1/y_B + 1/(N_B - y_B). A zero cell raises
// ZeroCellError unless continuity is set, which adds 0.5 to all four cells.
EffectEstimate bc_log_or(double y_b, double n_b, double y_c, double n_c, bool continuity = false);

EffectEstimate bc_log_or(const AggregateData& ald, bool continuity = false);

// Anchored difference of two effects against the common comparator: point
// difference, summed variances, Wald interval. Scales must match; a
// conditional input is allowed but flagged with a warning, since mixing it
// with a marginal comparator changes what the difference means.
EffectEstimate bucher(const EffectEstimate& ac, const EffectEstimate& bc);

}  // namespace popadjust
