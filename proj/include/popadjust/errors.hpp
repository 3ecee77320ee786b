#ifndef POPADJUST_ERRORS_HPP
#define POPADJUST_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace popadjust {

enum class ErrorKind {
  numerical_failure,
  not_pos_def,
  domain_error,
  shape_error,
  rank_error,
  separation,
  no_feasible_weights,
  estimation_failed,
  degenerate_mean,
  degenerate_covariate,
  extrapolation,
  undefined_at_time,
  config_error,
  synthesis_degenerate,
  negative_variance,
  pooling_unstable,
  zero_cell,
  scale_mismatch,
  schema_error,
  value_error,
  missing_data,
  diagnostics_failed,
};

const char* error_kind_name(ErrorKind kind);

/// Base class for every failure raised by this library. Carries a machine
/// readable kind so callers (bootstrap loops, the CLI) can branch without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define POPADJUST_DEFINE_ERROR(Name, Kind)                       \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& msg) : Error(Kind, msg) {}  \
  }

POPADJUST_DEFINE_ERROR(NumericalFailure, ErrorKind::numerical_failure);
POPADJUST_DEFINE_ERROR(NotPosDefError, ErrorKind::not_pos_def);
POPADJUST_DEFINE_ERROR(DomainError, ErrorKind::domain_error);
POPADJUST_DEFINE_ERROR(ShapeError, ErrorKind::shape_error);
POPADJUST_DEFINE_ERROR(RankError, ErrorKind::rank_error);
POPADJUST_DEFINE_ERROR(SeparationError, ErrorKind::separation);
POPADJUST_DEFINE_ERROR(NoFeasibleWeights, ErrorKind::no_feasible_weights);
POPADJUST_DEFINE_ERROR(EstimationFailed, ErrorKind::estimation_failed);
POPADJUST_DEFINE_ERROR(DegenerateMeanError, ErrorKind::degenerate_mean);
POPADJUST_DEFINE_ERROR(DegenerateCovariateError, ErrorKind::degenerate_covariate);
POPADJUST_DEFINE_ERROR(ExtrapolationError, ErrorKind::extrapolation);
POPADJUST_DEFINE_ERROR(UndefinedAtTimeError, ErrorKind::undefined_at_time);
POPADJUST_DEFINE_ERROR(ConfigError, ErrorKind::config_error);
POPADJUST_DEFINE_ERROR(PoolingUnstableError, ErrorKind::pooling_unstable);
POPADJUST_DEFINE_ERROR(ZeroCellError, ErrorKind::zero_cell);
POPADJUST_DEFINE_ERROR(ScaleMismatchError, ErrorKind::scale_mismatch);
POPADJUST_DEFINE_ERROR(SchemaError, ErrorKind::schema_error);
POPADJUST_DEFINE_ERROR(ValueError, ErrorKind::value_error);
POPADJUST_DEFINE_ERROR(MissingDataError, ErrorKind::missing_data);
POPADJUST_DEFINE_ERROR(DiagnosticsFailedError, ErrorKind::diagnostics_failed);

#undef POPADJUST_DEFINE_ERROR

/// Raised when a single simulated dataset cannot support the second-stage
/// model (an arm with all-0 or all-1 outcomes). Carries which replicate.
class SynthesisDegenerateError : public Error {
 public:
  SynthesisDegenerateError(std::size_t index, const std::string& msg)
      : Error(ErrorKind::synthesis_degenerate, msg), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Raised by the combining-rules pooling when (1 + 1/M) b - v_bar <= 0.
/// Carries the ingredients so callers can switch to posterior-simulation
/// pooling or report the instability.
class NegativeVarianceError : public Error {
 public:
  NegativeVarianceError(std::size_t m, double between, double within, const std::string& msg)
      : Error(ErrorKind::negative_variance, msg), m_(m), between_(between), within_(within) {}
  std::size_t m() const { return m_; }
  double between() const { return between_; }
  double within() const { return within_; }

 private:
  std::size_t m_;
  double between_;
  double within_;
};

}  // namespace popadjust

#endif
