#pragma once
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "popadjust/data.hpp"
#include "popadjust/mcmc.hpp"
#include "popadjust/rng.hpp"

namespace popadjust {

// Data-generating design for one benchmark cell: two trials whose covariates
// share dispersion and correlation but differ in means, and a logistic
// outcome in which every covariate is prognostic and the first n_em also
// interact with treatment. The defaults are the strong-overlap N=600 cell.
struct ScenarioConfig {
  std::size_t scenario_id = 0;
  std::size_t n_ac = 600;
  std::size_t n_bc = 600;
  double alloc = 2.0 / 3.0;  // active-arm fraction, both trials
  double mean_ac = 0.45;
  double mean_bc = 0.6;
  double sd = 0.4;
  double rho = 0.2;
  std::size_t k = 4;
  std::size_t n_em = 2;
  double b0 = -0.62;                   // baseline event fraction ~ 0.35
  double b_prog = 0.6931471805599453;  // ln 2 per prognostic covariate
  double b_em = 0.4004775665971252;    // -ln 0.67 interaction per effect modifier
  double b_z = -1.7719568419318752;    // ln 0.17 active-arm coefficient

  void validate() const;
};

enum class Trial { ac, bc };

enum class Method { maic, stc, gcomp_ml, gcomp_bayes, mim, gcomp_paramsim };

const char* method_name(Method m);

std::vector<Method> default_methods();

// Stream-slot layout under one master seed: slots 0/1 are the two generated
// trials, estimator randomness lives at 16 + method id and pseudo-population
// synthesis at 64 + method id. Keyed by enum identity, so extending the
// method list never perturbs existing draws.
inline std::uint64_t estimator_slot(Method m) {
  return 16 + static_cast<std::uint64_t>(m);
}
inline std::uint64_t population_slot(Method m) {
  return 64 + static_cast<std::uint64_t>(m);
}

// One simulated two-arm trial: MVN covariates, deterministic allocation
// (first round(N * alloc) rows active), Bernoulli outcomes from the logistic
// linear predictor.
IpdDataset generate_trial(const ScenarioConfig& cfg, Trial which, RngStream& rng);

// Reduce a trial to the published-summary form: per-covariate mean and
// (sample) SD, the supplied effect-modifier flags, and the 2x2 outcome
// counts with the active arm as B.
AggregateData aggregate_bc(const IpdDataset& ipd, const std::vector<bool>& effect_modifier);

struct SimOptions {
  std::size_t n_reps = 200;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t boot_b = 1000;
  std::size_t n_star = 1000;
  std::size_t syntheses = 1000;  // M
  PriorSpec prior;
  McmcConfig mcmc;
  double maic_failure_cap = 0.05;
  double bayes_drop_cap = 0.01;
  double mim_degenerate_cap = 0.01;
};

struct MethodResult {
  bool ok = false;
  EffectEstimate estimate;  // A vs B after anchoring
  std::string error;
};

struct ReplicateResult {
  std::vector<MethodResult> methods;  // parallel to ScenarioResult::methods
};

struct ScenarioResult {
  ScenarioConfig cfg;
  std::vector<Method> methods;
  std::vector<ReplicateResult> replicates;
};

// Run n_reps fresh replicates: simulate both trials, aggregate the comparator
// trial, run every requested method, anchor each against the count-based
// B-vs-C estimate. A method failure is recorded on its own slot and never
// aborts the others. Every random stream is keyed by
// (scenario_id, replicate, slot), so results are independent of the worker
// count and of which other methods run.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                            const SimOptions& opt);

struct MethodPerformance {
  std::size_t n_used = 0;
  double bias = 0.0, bias_mcse = 0.0;
  double ese = 0.0, ese_mcse = 0.0;
  double mse = 0.0, mse_mcse = 0.0;
  double vr = 0.0, vr_mcse = 0.0;  // mean model SE / empirical SE
  double coverage = 0.0, coverage_mcse = 0.0;
};

// Frequentist operating characteristics of a set of estimates against the
// known truth, each with its Monte Carlo standard error.
MethodPerformance performance(const std::vector<EffectEstimate>& estimates,
                              double true_delta = 0.0);

struct PerformanceRow {
  Method method = Method::maic;
  std::size_t n_failed = 0;
  MethodPerformance perf;
};

// Per-method summary of a scenario run; methods with fewer than two usable
// replicates get NaN metrics rather than an error.
std::vector<PerformanceRow> summarize_scenario(const ScenarioResult& result,
                                               double true_delta = 0.0);

// The full 3x3 cross of AC sample size {200, 400, 600} by AC covariate mean
// {0.45, 0.3, 0.15}, ids 0..8 in row-major order (size varies fastest over
// means).
std::vector<ScenarioConfig> scenario_grid();

// Tab-separated outputs: one row per (replicate, method) estimate, and one
// row per (method, metric) summary. The header/rows split lets several
// scenarios share one file.
void write_raw_header(std::ostream& os);
void write_raw_rows(std::ostream& os, const ScenarioResult& result);
void write_raw_estimates(std::ostream& os, const ScenarioResult& result);
void write_performance_header(std::ostream& os);
void write_performance_rows(std::ostream& os, const ScenarioConfig& cfg,
                            const std::vector<PerformanceRow>& rows);
void write_performance_table(std::ostream& os, const ScenarioConfig& cfg,
                             const std::vector<PerformanceRow>& rows);

}  // namespace popadjust
