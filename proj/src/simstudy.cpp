#include "popadjust/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "popadjust/distributions.hpp"
#include "popadjust/errors.hpp"
#include "popadjust/gcomp.hpp"
#include "popadjust/indirect.hpp"
#include "popadjust/maic.hpp"
#include "popadjust/mim.hpp"
#include "popadjust/population.hpp"
#include "popadjust/stc.hpp"

namespace popadjust {

void ScenarioConfig::validate() const {
  if (n_ac < 2 || n_bc < 2) throw ConfigError("ScenarioConfig: trials need at least 2 subjects");
  if (!(alloc > 0.0 && alloc < 1.0))
    throw ConfigError("ScenarioConfig: allocation must be in (0, 1)");
  if (k == 0) throw ConfigError("ScenarioConfig: at least one covariate required");
  if (n_em > k) throw ConfigError("ScenarioConfig: more effect modifiers than covariates");
  if (!(sd > 0.0)) throw ConfigError("ScenarioConfig: covariate sd must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("ScenarioConfig: correlation out of range");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::maic: return "maic";
    case Method::stc: return "stc";
    case Method::gcomp_ml: return "gcomp-ml";
    case Method::gcomp_bayes: return "gcomp-bayes";
    case Method::mim: return "mim";
    case Method::gcomp_paramsim: return "gcomp-paramsim";
  }
  return "?";
}

std::vector<Method> default_methods() {
  return {Method::maic, Method::stc, Method::gcomp_ml, Method::gcomp_bayes, Method::mim};
}

IpdDataset generate_trial(const ScenarioConfig& cfg, Trial which, RngStream& rng) {
  cfg.validate();
  const std::size_t n = which == Trial::ac ? cfg.n_ac : cfg.n_bc;
  const double mu = which == Trial::ac ? cfg.mean_ac : cfg.mean_bc;

  Vector mean(cfg.k, mu);
  Matrix cov(cfg.k, cfg.k);
  for (std::size_t i = 0; i < cfg.k; ++i)
    for (std::size_t j = 0; j < cfg.k; ++j)
      cov(i, j) = cfg.sd * cfg.sd * (i == j ? 1.0 : cfg.rho);

  IpdDataset out;
  out.x = mvn_sample(mean, cov, n, rng);
  const auto n_active =
      static_cast<std::size_t>(std::lround(cfg.alloc * static_cast<double>(n)));
  out.treatment.resize(n);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int z = i < n_active ? 1 : 0;
    double eta = cfg.b0;
    for (std::size_t j = 0; j < cfg.k; ++j) eta += cfg.b_prog * out.x(i, j);
    if (z == 1) {
      eta += cfg.b_z;
      for (std::size_t j = 0; j < cfg.n_em; ++j) eta += cfg.b_em * out.x(i, j);
    }
    out.treatment[i] = z;
    out.y[i] = sample_bernoulli(rng, expit(eta));
  }
  out.covariate_names.resize(cfg.k);
  for (std::size_t j = 0; j < cfg.k; ++j)
    out.covariate_names[j] = "X" + std::to_string(j + 1);
  return out;
}

AggregateData aggregate_bc(const IpdDataset& ipd, const std::vector<bool>& effect_modifier) {
  ipd.validate();
  if (ipd.n() < 2) throw ValueError("aggregate_bc: need at least 2 subjects for SDs");
  if (effect_modifier.size() != ipd.k())
    throw ShapeError("aggregate_bc: one effect-modifier flag per covariate required");

  AggregateData out;
  out.effect_modifier = effect_modifier;
  const std::size_t n = ipd.n();
  const std::size_t k = ipd.k();
  out.means.resize(k);
  out.sds.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += ipd.x(i, j);
    const double m = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (ipd.x(i, j) - m) * (ipd.x(i, j) - m);
    out.means[j] = m;
    out.sds[j] = std::sqrt(ss / static_cast<double>(n - 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (ipd.treatment[i] == 1) {
      out.n_b += 1.0;
      out.y_b += ipd.y[i];
    } else {
      out.n_c += 1.0;
      out.y_c += ipd.y[i];
    }
  }
  return out;
}

namespace {

// Slot layout inside a replicate's stream space: 0/1 are the two trials,
// 16+method is the estimator stream, 64+method the pseudo-population stream.
// Keys depend on the method identity, not its position in the request list,
// so adding a method never changes another's results.
RngStream replicate_stream(const SimOptions& opt, std::size_t scenario, std::size_t rep,
                           std::size_t slot) {
  return RngStream(opt.seed, stream_key(scenario, rep, slot));
}

EffectEstimate run_method(Method method, const ScenarioConfig& cfg, const SimOptions& opt,
                          const IpdDataset& ac, const AggregateData& ald, const ModelSpec& spec,
                          RngStream& est_rng, RngStream& pop_rng) {
  switch (method) {
    case Method::maic: {
      MaicOptions mo;
      mo.boot_b = opt.boot_b;
      mo.failure_cap = opt.maic_failure_cap;
      return maic_estimate(ac, ald, mo, est_rng);
    }
    case Method::stc:
      return stc_estimate(ac, ald);
    case Method::gcomp_ml:
    case Method::gcomp_paramsim:
    case Method::gcomp_bayes:
    case Method::mim: {
      PopulationSpec pop =
          normal_population(ald.means, ald.sds, infer_correlation(ac), opt.n_star);
      Matrix x_star = synthesize_copula(pop, pop_rng);
      if (method == Method::gcomp_ml) {
        GcompOptions go;
        go.boot_b = opt.boot_b;
        return gcomp_ml(spec, ac, x_star, go, est_rng);
      }
      if (method == Method::gcomp_paramsim) {
        GlmFit fit = fit_glm(spec, ac);
        return gcomp_paramsim(fit, spec, x_star, opt.boot_b, est_rng);
      }
      if (method == Method::gcomp_bayes) {
        BayesGcompOptions bo;
        bo.prior = opt.prior;
        bo.mcmc = opt.mcmc;
        bo.drop_cap = opt.bayes_drop_cap;
        return gcomp_bayes(spec, ac, x_star, bo, est_rng);
      }
      MimOptions mo;
      mo.syntheses = opt.syntheses;
      mo.alloc_ratio = cfg.alloc;
      mo.prior = opt.prior;
      mo.mcmc = opt.mcmc;
      mo.degenerate_cap = opt.mim_degenerate_cap;
      return mim_estimate(spec, ac, x_star, mo, est_rng);
    }
  }
  throw ConfigError("run_method: unknown method");
}

ReplicateResult run_replicate(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                              const SimOptions& opt, std::size_t rep) {
  RngStream ac_rng = replicate_stream(opt, cfg.scenario_id, rep, 0);
  RngStream bc_rng = replicate_stream(opt, cfg.scenario_id, rep, 1);
  IpdDataset ac = generate_trial(cfg, Trial::ac, ac_rng);
  IpdDataset bc = generate_trial(cfg, Trial::bc, bc_rng);

  std::vector<bool> em(cfg.k, false);
  for (std::size_t j = 0; j < cfg.n_em; ++j) em[j] = true;
  AggregateData ald = aggregate_bc(bc, em);

  ReplicateResult out;
  out.methods.resize(methods.size());

  EffectEstimate anchor;
  std::string anchor_error;
  try {
    anchor = bc_log_or(ald);
  } catch (const Error& e) {
    anchor_error = e.what();
  }

  ModelSpec spec;
  spec.link = Link::logit;
  spec.include_treatment = true;
  for (std::size_t j = 0; j < cfg.k; ++j) spec.prognostic.push_back(j);
  for (std::size_t j = 0; j < cfg.n_em; ++j) spec.effect_modifiers.push_back(j);

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodResult& slot = out.methods[mi];
    if (!anchor_error.empty()) {
      slot.error = anchor_error;
      continue;
    }
    RngStream est_rng = replicate_stream(opt, cfg.scenario_id, rep, estimator_slot(methods[mi]));
    RngStream pop_rng = replicate_stream(opt, cfg.scenario_id, rep, population_slot(methods[mi]));
    try {
      EffectEstimate ac_est =
          run_method(methods[mi], cfg, opt, ac, ald, spec, est_rng, pop_rng);
      slot.estimate = bucher(ac_est, anchor);
      slot.ok = true;
    } catch (const Error& e) {
      slot.error = e.what();
    }
  }
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                            const SimOptions& opt) {
  cfg.validate();
  if (methods.empty()) throw ConfigError("run_scenario: no methods requested");
  if (opt.n_reps == 0) throw ConfigError("run_scenario: n_reps must be positive");

  ScenarioResult out;
  out.cfg = cfg;
  out.methods = methods;
  out.replicates.resize(opt.n_reps);

  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, opt.n_reps));
  if (workers == 1) {
    for (std::size_t r = 0; r < opt.n_reps; ++r)
      out.replicates[r] = run_replicate(cfg, methods, opt, r);
    return out;
  }

  std::atomic<std::size_t> cursor{0};
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const std::size_t r = cursor.fetch_add(1);
          if (r >= opt.n_reps) break;
          out.replicates[r] = run_replicate(cfg, methods, opt, r);
        }
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : failures)
    if (e) std::rethrow_exception(e);
  return out;
}

MethodPerformance performance(const std::vector<EffectEstimate>& estimates, double true_delta) {
  const std::size_t n = estimates.size();
  if (n < 2) throw ConfigError("performance: at least two estimates required");
  Vector points(n), model_se(n), sq_err(n);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = estimates[i].point;
    model_se[i] = std::sqrt(estimates[i].variance);
    const double err = estimates[i].point - true_delta;
    sq_err[i] = err * err;
    if (estimates[i].ci_lower <= true_delta && true_delta <= estimates[i].ci_upper) ++covered;
  }
  const double nd = static_cast<double>(n);

  MethodPerformance out;
  out.n_used = n;
  out.ese = vector_sd(points);
  out.bias = vector_mean(points) - true_delta;
  out.bias_mcse = out.ese / std::sqrt(nd);
  out.ese_mcse = out.ese / std::sqrt(2.0 * (nd - 1.0));
  out.mse = vector_mean(sq_err);
  out.mse_mcse = vector_sd(sq_err) / std::sqrt(nd);
  const double mean_se = vector_mean(model_se);
  out.vr = mean_se / out.ese;
  // delta method on the ratio, treating numerator and denominator as
  // independent
  out.vr_mcse = out.vr * std::sqrt(vector_variance(model_se) / (nd * mean_se * mean_se) +
                                   1.0 / (2.0 * (nd - 1.0)));
  out.coverage = static_cast<double>(covered) / nd;
  out.coverage_mcse = std::sqrt(out.coverage * (1.0 - out.coverage) / nd);
  return out;
}

std::vector<PerformanceRow> summarize_scenario(const ScenarioResult& result, double true_delta) {
  std::vector<PerformanceRow> rows;
  for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
    PerformanceRow row;
    row.method = result.methods[mi];
    std::vector<EffectEstimate> ok;
    for (const auto& rep : result.replicates) {
      if (rep.methods[mi].ok) ok.push_back(rep.methods[mi].estimate);
      else ++row.n_failed;
    }
    if (ok.size() >= 2) {
      row.perf = performance(ok, true_delta);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.perf.n_used = ok.size();
      row.perf.bias = row.perf.bias_mcse = nan;
      row.perf.ese = row.perf.ese_mcse = nan;
      row.perf.mse = row.perf.mse_mcse = nan;
      row.perf.vr = row.perf.vr_mcse = nan;
      row.perf.coverage = row.perf.coverage_mcse = nan;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ScenarioConfig> scenario_grid() {
  const std::size_t sizes[3] = {200, 400, 600};
  const double means[3] = {0.45, 0.3, 0.15};
  std::vector<ScenarioConfig> out;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      ScenarioConfig cfg;
      cfg.scenario_id = 3 * i + j;
      cfg.n_ac = sizes[i];
      cfg.mean_ac = means[j];
      out.push_back(cfg);
    }
  return out;
}

namespace {

void write_double(std::ostream& os, double x) {
  if (std::isnan(x)) {
    os << "NA";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

}  // namespace

void write_raw_header(std::ostream& os) {
  os << "scenario\treplicate\tmethod\tstatus\tpoint\tvariance\tci_lower\tci_upper\terror\n";
}

void write_raw_rows(std::ostream& os, const ScenarioResult& result) {
  for (std::size_t r = 0; r < result.replicates.size(); ++r) {
    for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
      const MethodResult& mr = result.replicates[r].methods[mi];
      os << result.cfg.scenario_id << '\t' << r << '\t' << method_name(result.methods[mi])
         << '\t' << (mr.ok ? "ok" : "failed") << '\t';
      if (mr.ok) {
        write_double(os, mr.estimate.point);
        os << '\t';
        write_double(os, mr.estimate.variance);
        os << '\t';
        write_double(os, mr.estimate.ci_lower);
        os << '\t';
        write_double(os, mr.estimate.ci_upper);
        os << "\t\n";
      } else {
        os << "NA\tNA\tNA\tNA\t" << mr.error << '\n';
      }
    }
  }
}

void write_raw_estimates(std::ostream& os, const ScenarioResult& result) {
  write_raw_header(os);
  write_raw_rows(os, result);
}

void write_performance_header(std::ostream& os) {
  os << "scenario\tmethod\tmetric\tvalue\tmcse\n";
}

void write_performance_rows(std::ostream& os, const ScenarioConfig& cfg,
                            const std::vector<PerformanceRow>& rows) {
  for (const auto& row : rows) {
    const char* name = method_name(row.method);
    auto emit = [&](const char* metric, double value, double mcse, bool has_mcse = true) {
      os << cfg.scenario_id << '\t' << name << '\t' << metric << '\t';
      write_double(os, value);
      os << '\t';
      if (has_mcse) write_double(os, mcse);
      else os << "NA";
      os << '\n';
    };
    emit("bias", row.perf.bias, row.perf.bias_mcse);
    emit("empirical_se", row.perf.ese, row.perf.ese_mcse);
    emit("mse", row.perf.mse, row.perf.mse_mcse);
    emit("variability_ratio", row.perf.vr, row.perf.vr_mcse);
    emit("coverage", row.perf.coverage, row.perf.coverage_mcse);
    emit("replicates_used", static_cast<double>(row.perf.n_used), 0.0, false);
    emit("failures", static_cast<double>(row.n_failed), 0.0, false);
  }
}

void write_performance_table(std::ostream& os, const ScenarioConfig& cfg,
                             const std::vector<PerformanceRow>& rows) {
  write_performance_header(os);
  write_performance_rows(os, cfg, rows);
}

}  // namespace popadjust
