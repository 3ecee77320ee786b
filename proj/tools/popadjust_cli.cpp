#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "popadjust/errors.hpp"
#include "popadjust/io.hpp"
#include "popadjust/simstudy.hpp"

using namespace popadjust;
using ojson = nlohmann::ordered_json;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

bool method_from_name(const std::string& name, Method& out) {
  for (Method m : {Method::maic, Method::stc, Method::gcomp_ml, Method::gcomp_bayes,
                   Method::mim, Method::gcomp_paramsim})
    if (name == method_name(m)) {
      out = m;
      return true;
    }
  return false;
}

struct SimulateArgs {
  std::uint64_t seed = 0;
  std::vector<std::size_t> scenarios;
  std::size_t n_reps = 200;
  bool full = false;
  std::size_t workers = 1;
  SimOptions stat;  // statistical knobs shared with the library defaults
  std::string prefix = "simstudy";
  bool keep_raw = false;
};

int run_simulate(const SimulateArgs& args) {
  SimOptions opt = args.stat;
  opt.seed = args.seed;
  opt.n_reps = args.full ? 2000 : args.n_reps;
  opt.workers = args.workers;

  std::vector<ScenarioConfig> grid = scenario_grid();
  std::vector<std::size_t> ids = args.scenarios;
  if (ids.empty())
    for (std::size_t i = 0; i < grid.size(); ++i) ids.push_back(i);
  for (std::size_t id : ids)
    if (id >= grid.size())
      throw ConfigError("scenario id " + std::to_string(id) + " is outside 0.." +
                        std::to_string(grid.size() - 1));

  const std::vector<Method> methods = default_methods();

  std::ostringstream raw, perf;
  write_raw_header(raw);
  write_performance_header(perf);

  ojson summary;
  // Only inputs that determine the statistical results belong in the echo;
  // worker count and file paths stay out so reruns compare byte-identical.
  summary["config"]["seed"] = opt.seed;
  summary["config"]["n_reps"] = opt.n_reps;
  summary["config"]["boot_B"] = opt.boot_b;
  summary["config"]["n_star"] = opt.n_star;
  summary["config"]["M"] = opt.syntheses;
  summary["config"]["mcmc"]["chains"] = opt.mcmc.chains;
  summary["config"]["mcmc"]["iters"] = opt.mcmc.iters;
  summary["config"]["mcmc"]["warmup"] = opt.mcmc.warmup;
  summary["config"]["scenarios"] = ids;
  ojson names = ojson::array();
  for (Method m : methods) names.push_back(method_name(m));
  summary["config"]["methods"] = std::move(names);
  summary["results"] = ojson::array();

  for (std::size_t id : ids) {
    const ScenarioConfig& cfg = grid[id];
    ScenarioResult res = run_scenario(cfg, methods, opt);
    write_raw_rows(raw, res);
    std::vector<PerformanceRow> rows = summarize_scenario(res);
    write_performance_rows(perf, cfg, rows);

    ojson cell;
    cell["scenario"] = cfg.scenario_id;
    cell["n_ac"] = cfg.n_ac;
    cell["mean_ac"] = cfg.mean_ac;
    cell["n_bc"] = cfg.n_bc;
    cell["mean_bc"] = cfg.mean_bc;
    cell["methods"] = ojson::array();
    for (const PerformanceRow& row : rows) {
      ojson jm;
      jm["method"] = method_name(row.method);
      jm["replicates_used"] = row.perf.n_used;
      jm["failures"] = row.n_failed;
      jm["bias"] = row.perf.bias;
      jm["bias_mcse"] = row.perf.bias_mcse;
      jm["empirical_se"] = row.perf.ese;
      jm["empirical_se_mcse"] = row.perf.ese_mcse;
      jm["mse"] = row.perf.mse;
      jm["mse_mcse"] = row.perf.mse_mcse;
      jm["variability_ratio"] = row.perf.vr;
      jm["variability_ratio_mcse"] = row.perf.vr_mcse;
      jm["coverage"] = row.perf.coverage;
      jm["coverage_mcse"] = row.perf.coverage_mcse;
      cell["methods"].push_back(std::move(jm));
    }
    summary["results"].push_back(std::move(cell));
  }
  summary["seed"] = opt.seed;
  summary["versions"]["library"] = kLibraryVersion;
  summary["versions"]["result_format"] = kResultFormatVersion;

  const std::string summary_text = summary.dump(2) + "\n";
  write_file(args.prefix + "_performance.tsv", perf.str());
  write_file(args.prefix + "_summary.json", summary_text);
  if (args.keep_raw) write_file(args.prefix + "_raw.tsv", raw.str());
  std::cout << summary_text;
  return 0;
}

struct ReportArgs {
  std::string raw_path;
  double true_delta = 0.0;
  std::string out_path;
};

int run_report(const ReportArgs& args) {
  std::ifstream in(args.raw_path);
  if (!in) throw SchemaError(args.raw_path + ": cannot open");
  std::vector<RawEstimateRow> rows = read_raw_estimates(in, args.raw_path);
  if (rows.empty()) throw SchemaError(args.raw_path + ": no estimate rows");

  // group by (scenario, method) in first-appearance order
  std::vector<std::pair<std::size_t, std::string>> order;
  std::map<std::pair<std::size_t, std::string>, std::vector<RawEstimateRow>> groups;
  for (RawEstimateRow& row : rows) {
    auto key = std::make_pair(row.scenario, row.method);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(std::move(row));
  }

  std::ostringstream os;
  write_performance_header(os);
  for (const auto& key : order) {
    const std::vector<RawEstimateRow>& group = groups[key];
    Method m;
    if (!method_from_name(key.second, m))
      throw SchemaError(args.raw_path + ": unknown method " + key.second);
    std::vector<EffectEstimate> ok;
    std::size_t failed = 0;
    for (const RawEstimateRow& row : group)
      if (row.ok)
        ok.push_back(row.estimate);
      else
        ++failed;
    PerformanceRow out_row;
    out_row.method = m;
    out_row.n_failed = failed;
    if (ok.size() >= 2) {
      out_row.perf = performance(ok, args.true_delta);
    } else {
      out_row.perf = MethodPerformance{};
      out_row.perf.n_used = ok.size();
    }
    ScenarioConfig cfg;
    cfg.scenario_id = key.first;
    write_performance_rows(os, cfg, {out_row});
  }
  if (args.out_path.empty())
    std::cout << os.str();
  else
    write_file(args.out_path, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population-adjusted anchored indirect comparison toolkit"};
  app.require_subcommand(1);

  AnalysisConfig cfg;
  std::uint64_t seed = 0;
  std::string engine = "ml";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--ipd", cfg.ipd_path, "patient-level CSV (X1..XK, trt, y)")->required();
    sub->add_option("--ald", cfg.ald_path,
                    "aggregate CSV (mean.Xj, sd.Xj, y.B.sum, N.B, y.C.sum, N.C)")
        ->required();
    sub->add_option("--em", cfg.em_columns, "effect-modifier column, repeatable")->required();
    sub->add_option("--seed", seed, "master RNG seed")->required();
    sub->add_option("--out", cfg.output_path, "also write the result document to this path");
  };
  auto add_mcmc = [&](CLI::App* sub) {
    sub->add_option("--chains", cfg.mcmc.chains)->capture_default_str();
    sub->add_option("--iters", cfg.mcmc.iters)->capture_default_str();
    sub->add_option("--warmup", cfg.mcmc.warmup)->capture_default_str();
  };

  CLI::App* maic = app.add_subcommand("maic", "moment-matching weighted comparison");
  add_common(maic);
  maic->add_option("--boot-B", cfg.boot_b, "bootstrap resamples")->capture_default_str();

  CLI::App* stc = app.add_subcommand(
      "stc", "outcome-regression comparison on the conditional scale (reported as such)");
  add_common(stc);

  CLI::App* gcomp = app.add_subcommand("gcomp", "standardization over a pseudo-population");
  add_common(gcomp);
  gcomp->add_option("--engine", engine, "ml | paramsim | bayes")
      ->check(CLI::IsMember({"ml", "paramsim", "bayes"}))
      ->capture_default_str();
  gcomp->add_option("--n-star", cfg.n_star, "pseudo-population size")->capture_default_str();
  gcomp->add_option("--boot-B", cfg.boot_b, "bootstrap / parameter-simulation draws")
      ->capture_default_str();
  add_mcmc(gcomp);

  CLI::App* mim = app.add_subcommand("mim", "synthesis-and-pooling marginalization");
  add_common(mim);
  mim->add_option("--n-star", cfg.n_star, "pseudo-population size")->capture_default_str();
  mim->add_option("-M,--syntheses", cfg.syntheses, "synthetic outcome datasets")
      ->capture_default_str();
  add_mcmc(mim);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo benchmark of all methods");
  simulate->add_option("--seed", sim.seed, "master RNG seed")->required();
  simulate->add_option("--scenario", sim.scenarios, "grid cell id 0..8, repeatable (default all)");
  simulate->add_option("--n-reps", sim.n_reps, "replicates per scenario")->capture_default_str();
  simulate->add_flag("--full", sim.full, "run the 2000-replicate version");
  simulate->add_option("--workers", sim.workers, "worker threads")->capture_default_str();
  simulate->add_option("--boot-B", sim.stat.boot_b)->capture_default_str();
  simulate->add_option("--n-star", sim.stat.n_star)->capture_default_str();
  simulate->add_option("-M,--syntheses", sim.stat.syntheses)->capture_default_str();
  simulate->add_option("--chains", sim.stat.mcmc.chains)->capture_default_str();
  simulate->add_option("--iters", sim.stat.mcmc.iters)->capture_default_str();
  simulate->add_option("--warmup", sim.stat.mcmc.warmup)->capture_default_str();
  simulate->add_option("--out-prefix", sim.prefix, "output file prefix")->capture_default_str();
  simulate->add_flag("--raw", sim.keep_raw, "also persist per-replicate estimates");

  ReportArgs rep;
  CLI::App* report = app.add_subcommand("report", "summarize a raw-estimates table");
  report->add_option("--raw", rep.raw_path, "raw-estimates TSV")->required();
  report->add_option("--true-delta", rep.true_delta, "true contrast for bias/MSE/coverage")
      ->capture_default_str();
  report->add_option("--out", rep.out_path, "performance TSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << error_document("UsageError", e.what());
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  }

  try {
    if (app.got_subcommand(simulate)) return run_simulate(sim);
    if (app.got_subcommand(report)) return run_report(rep);

    if (app.got_subcommand(maic)) cfg.method = Method::maic;
    if (app.got_subcommand(stc)) cfg.method = Method::stc;
    if (app.got_subcommand(gcomp))
      cfg.method = engine == "ml"         ? Method::gcomp_ml
                   : engine == "paramsim" ? Method::gcomp_paramsim
                                          : Method::gcomp_bayes;
    if (app.got_subcommand(mim)) cfg.method = Method::mim;
    cfg.seed = seed;

    const std::string doc = run_analysis(cfg);
    std::cout << doc;
    if (!cfg.output_path.empty()) write_file(cfg.output_path, doc);
    return 0;
  } catch (const Error& e) {
    const std::string doc = error_document(e);
    std::cout << doc;
    return 1;
  } catch (const std::exception& e) {
    std::cout << error_document("Unexpected", e.what());
    return 2;
  }
}
