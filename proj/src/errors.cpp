#include "popadjust/errors.hpp"

namespace popadjust {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numerical_failure: return "NumericalFailure";
    case ErrorKind::not_pos_def: return "NotPosDef";
    case ErrorKind::domain_error: return "DomainError";
    case ErrorKind::shape_error: return "ShapeError";
    case ErrorKind::rank_error: return "RankError";
    case ErrorKind::separation: return "SeparationError";
    case ErrorKind::no_feasible_weights: return "NoFeasibleWeights";
    case ErrorKind::estimation_failed: return "EstimationFailed";
    case ErrorKind::degenerate_mean: return "DegenerateMean";
    case ErrorKind::degenerate_covariate: return "DegenerateCovariate";
    case ErrorKind::extrapolation: return "ExtrapolationError";
    case ErrorKind::undefined_at_time: return "UndefinedAtTime";
    case ErrorKind::config_error: return "ConfigError";
    case ErrorKind::synthesis_degenerate: return "SynthesisDegenerate";
    case ErrorKind::negative_variance: return "NegativeVarianceError";
    case ErrorKind::pooling_unstable: return "PoolingUnstable";
    case ErrorKind::zero_cell: return "ZeroCellError";
    case ErrorKind::scale_mismatch: return "ScaleMismatch";
    case ErrorKind::schema_error: return "SchemaError";
    case ErrorKind::value_error: return "ValueError";
    case ErrorKind::missing_data: return "MissingDataError";
    case ErrorKind::diagnostics_failed: return "DiagnosticsFailed";
  }
  return "Error";
}

}  // namespace popadjust
