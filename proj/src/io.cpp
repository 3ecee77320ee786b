#include "popadjust/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "popadjust/errors.hpp"
#include "popadjust/gcomp.hpp"
#include "popadjust/glm.hpp"
#include "popadjust/indirect.hpp"
#include "popadjust/maic.hpp"
#include "popadjust/mim.hpp"
#include "popadjust/stc.hpp"

namespace popadjust {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& line, char sep, bool do_trim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    std::string tok = pos == std::string::npos ? line.substr(start)
                                               : line.substr(start, pos - start);
    out.push_back(do_trim ? trim(tok) : std::move(tok));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& names,
                                                const std::string& origin) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty())
      throw SchemaError(origin + ": header has an unnamed column at position " +
                        std::to_string(i + 1));
    if (!out.emplace(names[i], i).second)
      throw SchemaError(origin + ": duplicate column " + names[i]);
  }
  return out;
}

// covariate columns must form a gap-free block prefix1..prefixK
std::size_t covariate_count(const std::map<std::string, std::size_t>& cols,
                            const std::string& prefix, const std::string& origin) {
  std::size_t k = 0;
  while (cols.count(prefix + std::to_string(k + 1))) ++k;
  if (k == 0) throw SchemaError(origin + ": missing column " + prefix + "1");
  for (const auto& [name, pos] : cols) {
    (void)pos;
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string tail = name.substr(prefix.size());
    if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) continue;
    std::size_t idx = std::stoul(tail);
    if (idx == 0 || idx > k)
      throw SchemaError(origin + ": covariate columns must run " + prefix + "1.." + prefix +
                        std::to_string(k) + " without gaps; found " + name);
  }
  return k;
}

double parse_cell(const std::string& token, const std::string& origin, std::size_t row,
                  const std::string& column) {
  if (token.empty() || token == "NA" || token == "na" || token == "NaN")
    throw MissingDataError(origin + ": missing " + column + " in data row " +
                           std::to_string(row));
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || !std::isfinite(v))
    throw ValueError(origin + ": cannot read " + column + " value '" + token +
                     "' in data row " + std::to_string(row));
  return v;
}

int parse_binary(const std::string& token, const std::string& origin, std::size_t row,
                 const std::string& column) {
  double v = parse_cell(token, origin, row, column);
  if (v != 0.0 && v != 1.0)
    throw ValueError(origin + ": " + column + " must be 0 or 1, got '" + token +
                     "' in data row " + std::to_string(row));
  return static_cast<int>(v);
}

}  // namespace

IpdFile read_ipd_csv(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(origin + ": empty file");
  const std::vector<std::string> names = split_on(line, ',', true);
  const auto cols = header_index(names, origin);
  const std::size_t k = covariate_count(cols, "X", origin);

  auto pos_of = [&](const std::string& name) {
    auto it = cols.find(name);
    if (it == cols.end()) throw SchemaError(origin + ": missing column " + name);
    return it->second;
  };
  const std::size_t trt_pos = pos_of("trt");

  const bool has_y = cols.count("y") > 0;
  const bool has_time = cols.count("time") > 0 || cols.count("event") > 0;
  if (has_y && has_time)
    throw SchemaError(origin + ": outcome must be either y or time/event, not both");
  if (!has_y && !has_time) throw SchemaError(origin + ": missing column y (or time, event)");

  IpdFile out;
  out.is_survival = !has_y;
  const std::size_t y_pos = has_y ? pos_of("y") : 0;
  const std::size_t time_pos = out.is_survival ? pos_of("time") : 0;
  const std::size_t event_pos = out.is_survival ? pos_of("event") : 0;
  std::vector<std::size_t> x_pos(k);
  for (std::size_t j = 0; j < k; ++j) x_pos[j] = pos_of("X" + std::to_string(j + 1));

  std::vector<Vector> x_rows;
  std::vector<int> trt, y, event;
  Vector time;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> f = split_on(line, ',', true);
    if (f.size() != names.size())
      throw SchemaError(origin + ": data row " + std::to_string(row) + " has " +
                        std::to_string(f.size()) + " fields, header has " +
                        std::to_string(names.size()));
    Vector xr(k);
    for (std::size_t j = 0; j < k; ++j)
      xr[j] = parse_cell(f[x_pos[j]], origin, row, names[x_pos[j]]);
    x_rows.push_back(std::move(xr));
    trt.push_back(parse_binary(f[trt_pos], origin, row, "trt"));
    if (out.is_survival) {
      time.push_back(parse_cell(f[time_pos], origin, row, "time"));
      event.push_back(parse_binary(f[event_pos], origin, row, "event"));
    } else {
      y.push_back(parse_binary(f[y_pos], origin, row, "y"));
    }
  }
  if (row == 0) throw SchemaError(origin + ": no data rows");

  Matrix x(row, k);
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t j = 0; j < k; ++j) x(i, j) = x_rows[i][j];
  std::vector<std::string> covariate_names(k);
  for (std::size_t j = 0; j < k; ++j) covariate_names[j] = "X" + std::to_string(j + 1);

  if (out.is_survival) {
    out.survival.x = std::move(x);
    out.survival.treatment = std::move(trt);
    out.survival.time = std::move(time);
    out.survival.event = std::move(event);
    out.survival.validate();
  } else {
    out.binary.x = std::move(x);
    out.binary.treatment = std::move(trt);
    out.binary.y = std::move(y);
    out.binary.covariate_names = std::move(covariate_names);
    out.binary.validate();
  }
  return out;
}

IpdFile read_ipd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open");
  return read_ipd_csv(in, path);
}

AggregateData read_ald_csv(std::istream& in, const std::string& origin,
                           const std::vector<std::string>& em_columns) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(origin + ": empty file");
  const std::vector<std::string> names = split_on(line, ',', true);
  const auto cols = header_index(names, origin);
  const std::size_t k = covariate_count(cols, "mean.X", origin);

  auto pos_of = [&](const std::string& name) {
    auto it = cols.find(name);
    if (it == cols.end()) throw SchemaError(origin + ": missing column " + name);
    return it->second;
  };
  for (std::size_t j = 1; j <= k; ++j) pos_of("sd.X" + std::to_string(j));

  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!trim(line).empty()) rows.push_back(line);
  if (rows.empty()) throw SchemaError(origin + ": no data row");
  if (rows.size() > 1)
    throw SchemaError(origin + ": expected a single data row, found " +
                      std::to_string(rows.size()));
  const std::vector<std::string> f = split_on(rows[0], ',', true);
  if (f.size() != names.size())
    throw SchemaError(origin + ": data row has " + std::to_string(f.size()) +
                      " fields, header has " + std::to_string(names.size()));
  auto cell = [&](const std::string& name) { return parse_cell(f[pos_of(name)], origin, 1, name); };

  AggregateData ald;
  ald.means.resize(k);
  ald.sds.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    ald.means[j] = cell("mean.X" + std::to_string(j + 1));
    ald.sds[j] = cell("sd.X" + std::to_string(j + 1));
    if (!(ald.sds[j] > 0.0))
      throw ValueError(origin + ": sd.X" + std::to_string(j + 1) + " must be positive");
  }
  ald.y_b = cell("y.B.sum");
  ald.n_b = cell("N.B");
  ald.y_c = cell("y.C.sum");
  ald.n_c = cell("N.C");
  for (const char* arm : {"B", "C"}) {
    double yy = arm[0] == 'B' ? ald.y_b : ald.y_c;
    double nn = arm[0] == 'B' ? ald.n_b : ald.n_c;
    if (!(nn > 0.0))
      throw ValueError(origin + ": N." + arm + " must be positive");
    if (yy < 0.0 || yy > nn)
      throw ValueError(origin + ": y." + arm + ".sum must lie in [0, N." + arm + "]");
  }

  ald.effect_modifier.assign(k, false);
  for (const std::string& name : em_columns) {
    std::size_t idx = 0;
    if (name.size() >= 2 && name[0] == 'X' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos)
      idx = std::stoul(name.substr(1));
    if (idx < 1 || idx > k)
      throw SchemaError(origin + ": effect-modifier column " + name + " is not one of X1..X" +
                        std::to_string(k));
    if (ald.effect_modifier[idx - 1])
      throw ConfigError("effect-modifier column " + name + " listed twice");
    ald.effect_modifier[idx - 1] = true;
  }
  ald.validate();
  return ald;
}

AggregateData read_ald(const std::string& path, const std::vector<std::string>& em_columns) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open");
  return read_ald_csv(in, path, em_columns);
}

std::string population_to_json(const PopulationSpec& spec) {
  json j;
  j["n_star"] = spec.n_star;
  j["marginals"] = json::array();
  for (const MarginalSpec& m : spec.marginals) {
    json jm;
    jm["family"] = marginal_family_name(m.family);
    jm["mean"] = m.mean;
    jm["sd"] = m.sd;
    jm["proportion"] = m.proportion;
    jm["lower"] = m.lower;
    jm["upper"] = m.upper;
    j["marginals"].push_back(std::move(jm));
  }
  json corr = json::array();
  for (std::size_t r = 0; r < spec.correlation.rows(); ++r) {
    json rowj = json::array();
    for (std::size_t c = 0; c < spec.correlation.cols(); ++c)
      rowj.push_back(spec.correlation(r, c));
    corr.push_back(std::move(rowj));
  }
  j["correlation"] = std::move(corr);
  return j.dump(2) + "\n";
}

PopulationSpec population_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("population json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n_star") || !j.contains("marginals") ||
      !j.contains("correlation"))
    throw SchemaError("population json: need n_star, marginals, correlation");
  if (!j["n_star"].is_number_integer())
    throw SchemaError("population json: n_star must be an integer");
  if (!j["marginals"].is_array() || !j["correlation"].is_array())
    throw SchemaError("population json: marginals and correlation must be arrays");

  PopulationSpec spec;
  spec.n_star = j["n_star"].get<std::uint64_t>();
  for (const json& jm : j["marginals"]) {
    if (!jm.is_object() || !jm.contains("family"))
      throw SchemaError("population json: each marginal needs a family");
    MarginalSpec m;
    const std::string fam = jm["family"].get<std::string>();
    bool known = false;
    for (MarginalFamily f : {MarginalFamily::normal, MarginalFamily::lognormal,
                             MarginalFamily::gamma, MarginalFamily::bernoulli,
                             MarginalFamily::truncated_normal})
      if (fam == marginal_family_name(f)) {
        m.family = f;
        known = true;
      }
    if (!known) throw ValueError("population json: unknown family " + fam);
    auto field = [&](const char* name, double fallback) {
      if (!jm.contains(name)) return fallback;
      if (!jm[name].is_number()) throw SchemaError(std::string("population json: ") + name +
                                                   " must be a number");
      return jm[name].get<double>();
    };
    m.mean = field("mean", m.mean);
    m.sd = field("sd", m.sd);
    m.proportion = field("proportion", m.proportion);
    m.lower = field("lower", m.lower);
    m.upper = field("upper", m.upper);
    spec.marginals.push_back(m);
  }
  const std::size_t k = spec.marginals.size();
  if (j["correlation"].size() != k)
    throw SchemaError("population json: correlation must be K x K");
  spec.correlation = Matrix(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    const json& rowj = j["correlation"][r];
    if (!rowj.is_array() || rowj.size() != k)
      throw SchemaError("population json: correlation must be K x K");
    for (std::size_t c = 0; c < k; ++c) {
      if (!rowj[c].is_number())
        throw SchemaError("population json: correlation entries must be numbers");
      spec.correlation(r, c) = rowj[c].get<double>();
    }
  }
  spec.validate();
  return spec;
}

void AnalysisConfig::validate() const {
  if (!seed) throw ConfigError("AnalysisConfig: seed is required");
  if (ipd_path.empty()) throw ConfigError("AnalysisConfig: patient-level input path is required");
  if (ald_path.empty()) throw ConfigError("AnalysisConfig: aggregate input path is required");
  if (n_star == 0) throw ConfigError("AnalysisConfig: pseudo-population size must be positive");
  if (boot_b == 0) throw ConfigError("AnalysisConfig: resample count must be positive");
  if (method == Method::mim && syntheses < 2)
    throw ConfigError("AnalysisConfig: at least two syntheses required");
  if (method == Method::gcomp_bayes || method == Method::mim) {
    prior.validate();
    mcmc.validate();
  }
}

namespace {

json resolved_config(const AnalysisConfig& cfg) {
  json rc;
  rc["method"] = method_name(cfg.method);
  rc["ipd"] = cfg.ipd_path;
  rc["ald"] = cfg.ald_path;
  rc["effect_modifiers"] = cfg.em_columns;
  rc["n_star"] = cfg.n_star;
  rc["boot_B"] = cfg.boot_b;
  rc["M"] = cfg.syntheses;
  rc["prior"]["intercept_scale"] = cfg.prior.intercept_scale;
  rc["prior"]["coef_scale"] = cfg.prior.coef_scale;
  rc["prior"]["autoscale"] = cfg.prior.autoscale;
  rc["mcmc"]["chains"] = cfg.mcmc.chains;
  rc["mcmc"]["iters"] = cfg.mcmc.iters;
  rc["mcmc"]["warmup"] = cfg.mcmc.warmup;
  rc["mcmc"]["thin"] = cfg.mcmc.thin;
  rc["mcmc"]["rhat_limit"] = cfg.mcmc.rhat_limit;
  rc["seed"] = *cfg.seed;
  return rc;
}

json versions_block() {
  json v;
  v["library"] = kLibraryVersion;
  v["result_format"] = kResultFormatVersion;
  return v;
}

}  // namespace

std::string run_analysis(const AnalysisConfig& cfg) {
  cfg.validate();
  IpdFile file = read_ipd(cfg.ipd_path);
  if (file.is_survival)
    throw ConfigError(
        "run_analysis: anchored comparison methods need the binary outcome schema (trt, y)");
  const IpdDataset& ipd = file.binary;
  AggregateData ald = read_ald(cfg.ald_path, cfg.em_columns);
  if (ald.k() != ipd.k())
    throw ShapeError("run_analysis: patient-level data has " + std::to_string(ipd.k()) +
                     " covariates but the aggregate row has " + std::to_string(ald.k()));

  ModelSpec spec;
  spec.link = Link::logit;
  spec.include_treatment = true;
  for (std::size_t j = 0; j < ipd.k(); ++j) spec.prognostic.push_back(j);
  for (std::size_t j = 0; j < ipd.k(); ++j)
    if (ald.effect_modifier[j]) spec.effect_modifiers.push_back(j);

  EffectEstimate anchor = bc_log_or(ald);
  RngStream est_rng(*cfg.seed, stream_key(0, 0, estimator_slot(cfg.method)));
  RngStream pop_rng(*cfg.seed, stream_key(0, 0, population_slot(cfg.method)));

  json diagnostics;
  EffectEstimate ac_est;
  switch (cfg.method) {
    case Method::maic: {
      MaicOptions mo;
      mo.boot_b = cfg.boot_b;
      ac_est = maic_estimate(ipd, ald, mo, est_rng);
      break;
    }
    case Method::stc:
      ac_est = stc_estimate(ipd, ald);
      break;
    default: {
      PopulationSpec pop =
          normal_population(ald.means, ald.sds, infer_correlation(ipd), cfg.n_star);
      Matrix x_star = synthesize_copula(pop, pop_rng);
      if (cfg.method == Method::gcomp_ml) {
        GcompOptions go;
        go.boot_b = cfg.boot_b;
        ac_est = gcomp_ml(spec, ipd, x_star, go, est_rng);
      } else if (cfg.method == Method::gcomp_paramsim) {
        GlmFit fit = fit_glm(spec, ipd);
        ac_est = gcomp_paramsim(fit, spec, x_star, cfg.boot_b, est_rng);
      } else if (cfg.method == Method::gcomp_bayes) {
        BayesGcompOptions bo;
        bo.prior = cfg.prior;
        bo.mcmc = cfg.mcmc;
        McmcDiagnostics md;
        ac_est = gcomp_bayes(spec, ipd, x_star, bo, est_rng, &md);
        double rhat_max = 0.0;
        for (double r : md.rhat) rhat_max = std::max(rhat_max, r);
        double ess_min = std::numeric_limits<double>::infinity();
        for (double e : md.ess) ess_min = std::min(ess_min, e);
        diagnostics["rhat_max"] = rhat_max;
        diagnostics["ess_min"] = ess_min;
        diagnostics["dropped_draws"] = md.dropped_draws;
      } else {
        MimOptions mo;
        mo.syntheses = cfg.syntheses;
        double treated = 0.0;
        for (int z : ipd.treatment) treated += z;
        mo.alloc_ratio = treated / static_cast<double>(ipd.n());
        mo.prior = cfg.prior;
        mo.mcmc = cfg.mcmc;
        SecondStage stage;
        ac_est = mim_estimate(spec, ipd, x_star, mo, est_rng, &stage);
        diagnostics["degenerate_syntheses"] = stage.degenerate;
      }
    }
  }

  EffectEstimate final_est = bucher(ac_est, anchor);
  diagnostics["failed_resamples"] = final_est.failed_resamples;
  diagnostics["total_resamples"] = final_est.total_resamples;

  json doc;
  doc["method"] = method_name(cfg.method);
  doc["estimand"] = estimand_name(final_est.estimand);
  doc["scale"] = effect_scale_name(final_est.scale);
  doc["delta_AC"] = ac_est.point;
  doc["var_AC"] = ac_est.variance;
  doc["delta_BC"] = anchor.point;
  doc["var_BC"] = anchor.variance;
  doc["delta_AB"] = final_est.point;
  doc["var_AB"] = final_est.variance;
  doc["ci95"] = json::array({final_est.ci_lower, final_est.ci_upper});
  json warnings = json::array();
  if (!final_est.warning.empty()) warnings.push_back(final_est.warning);
  doc["warnings"] = std::move(warnings);
  doc["diagnostics"] = std::move(diagnostics);
  doc["inputs"]["ipd_rows"] = ipd.n();
  doc["inputs"]["covariates"] = ipd.k();
  doc["seed"] = *cfg.seed;
  doc["config"] = resolved_config(cfg);
  doc["versions"] = versions_block();
  return doc.dump(2) + "\n";
}

std::string error_document(const Error& e) {
  const std::string kind = error_kind_name(e.kind());
  std::string message = e.what();
  if (message.rfind(kind + ": ", 0) == 0) message.erase(0, kind.size() + 2);
  return error_document(kind, message);
}

std::string error_document(const std::string& kind, const std::string& message) {
  json doc;
  doc["error"]["kind"] = kind;
  doc["error"]["message"] = message;
  doc["versions"] = versions_block();
  return doc.dump(2) + "\n";
}

std::vector<RawEstimateRow> read_raw_estimates(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(origin + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected = "scenario\treplicate\tmethod\tstatus\tpoint\tvariance\tci_lower\tci_upper\terror";
  if (line != expected)
    throw SchemaError(origin + ": unexpected header; this is not a raw-estimates table");

  std::vector<RawEstimateRow> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_on(line, '\t', false);
    if (f.size() != 9)
      throw SchemaError(origin + ": line " + std::to_string(lineno) + " has " +
                        std::to_string(f.size()) + " fields, expected 9");
    RawEstimateRow row;
    try {
      row.scenario = std::stoul(f[0]);
      row.replicate = std::stoul(f[1]);
    } catch (const std::exception&) {
      throw SchemaError(origin + ": line " + std::to_string(lineno) +
                        " has non-integer scenario/replicate");
    }
    row.method = f[2];
    if (f[3] == "ok")
      row.ok = true;
    else if (f[3] == "failed")
      row.ok = false;
    else
      throw SchemaError(origin + ": line " + std::to_string(lineno) + " has status '" + f[3] +
                        "'");
    if (row.ok) {
      row.estimate.point = parse_cell(f[4], origin, lineno, "point");
      row.estimate.variance = parse_cell(f[5], origin, lineno, "variance");
      row.estimate.ci_lower = parse_cell(f[6], origin, lineno, "ci_lower");
      row.estimate.ci_upper = parse_cell(f[7], origin, lineno, "ci_upper");
    } else {
      row.error = f[8];
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace popadjust
