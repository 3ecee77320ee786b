#ifndef POPADJUST_DATA_HPP
#define POPADJUST_DATA_HPP

#include <string>
#include <vector>

#include "popadjust/linalg.hpp"

namespace popadjust {

/// Individual patient data from a two-arm trial with a binary endpoint.
struct IpdDataset {
  Matrix x;                                  // N x K covariates
  std::vector<int> treatment;                // 0/1 per subject
  std::vector<int> y;                        // 0/1 per subject
  std::vector<std::string> covariate_names;  // optional (set by file readers)

  std::size_t n() const { return x.rows(); }
  std::size_t k() const { return x.cols(); }
  void validate() const;
};

/// Individual patient data with a right-censored time-to-event endpoint.
struct SurvivalData {
  Matrix x;
  std::vector<int> treatment;
  Vector time;
  std::vector<int> event;  // 1 = event, 0 = censored

  std::size_t n() const { return x.rows(); }
  std::size_t k() const { return x.cols(); }
  void validate() const;
};

/// Published aggregate summaries from the comparator trial: covariate
/// means/SDs, which covariates modify the treatment effect, and the 2x2
/// outcome counts (B = active arm, C = common comparator).
struct AggregateData {
  Vector means;
  Vector sds;
  std::vector<bool> effect_modifier;  // per covariate
  double y_b = 0.0;
  double n_b = 0.0;
  double y_c = 0.0;
  double n_c = 0.0;

  std::size_t k() const { return means.size(); }
  std::vector<std::size_t> em_indices() const;
  void validate() const;
};

enum class Estimand { marginal, conditional };
enum class EffectScale { log_odds_ratio, log_hazard_ratio };
enum class Comparison { a_vs_c, b_vs_c, a_vs_b };

const char* estimand_name(Estimand e);
const char* effect_scale_name(EffectScale s);
const char* comparison_name(Comparison c);

/// A relative effect on a linear scale with its variance and a 95% interval.
/// The estimand tag records whether the number is marginal (population-level)
/// or conditional (covariate-adjusted coefficient); combining the two kinds
/// is flagged downstream.
struct EffectEstimate {
  double point = 0.0;
  double variance = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  Estimand estimand = Estimand::marginal;
  EffectScale scale = EffectScale::log_odds_ratio;
  Comparison comparison = Comparison::a_vs_c;
  std::size_t failed_resamples = 0;
  std::size_t total_resamples = 0;
  std::string warning;
};

/// z_{0.975}, shared by every Wald interval in the library.
inline constexpr double kZ975 = 1.959963984540054;

void set_wald_interval(EffectEstimate& est);

}  // namespace popadjust

#endif
