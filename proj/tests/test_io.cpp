#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "popadjust/errors.hpp"
#include "popadjust/io.hpp"
#include "popadjust/simstudy.hpp"

using namespace popadjust;

namespace {

IpdFile parse_ipd(const std::string& text) {
  std::istringstream in(text);
  return read_ipd_csv(in, "test");
}

AggregateData parse_ald(const std::string& text, const std::vector<std::string>& em) {
  std::istringstream in(text);
  return read_ald_csv(in, "test", em);
}

void write_ipd_file(const IpdDataset& ipd, const std::string& path) {
  std::ofstream out(path);
  for (std::size_t j = 0; j < ipd.k(); ++j) out << "X" << j + 1 << ",";
  out << "trt,y\n";
  for (std::size_t i = 0; i < ipd.n(); ++i) {
    for (std::size_t j = 0; j < ipd.k(); ++j) out << ipd.x(i, j) << ",";
    out << ipd.treatment[i] << "," << ipd.y[i] << "\n";
  }
}

void write_ald_file(const AggregateData& ald, const std::string& path) {
  std::ofstream out(path);
  for (std::size_t j = 0; j < ald.k(); ++j)
    out << "mean.X" << j + 1 << ",sd.X" << j + 1 << ",";
  out << "y.B.sum,N.B,y.C.sum,N.C\n";
  out.precision(17);
  for (std::size_t j = 0; j < ald.k(); ++j) out << ald.means[j] << "," << ald.sds[j] << ",";
  out << ald.y_b << "," << ald.n_b << "," << ald.y_c << "," << ald.n_c << "\n";
}

// one small study pair on disk, shared by the run_analysis cases
struct Fixture {
  std::string ipd_path = "io_fixture_ipd.csv";
  std::string ald_path = "io_fixture_ald.csv";

  Fixture() {
    ScenarioConfig cfg;
    cfg.n_ac = 140;
    cfg.n_bc = 200;
    RngStream ac_rng(99, 0), bc_rng(99, 1);
    IpdDataset ac = generate_trial(cfg, Trial::ac, ac_rng);
    IpdDataset bc = generate_trial(cfg, Trial::bc, bc_rng);
    write_ipd_file(ac, ipd_path);
    write_ald_file(aggregate_bc(bc, {true, true, false, false}), ald_path);
  }
};

AnalysisConfig fixture_config(const Fixture& fx, Method m) {
  AnalysisConfig cfg;
  cfg.method = m;
  cfg.ipd_path = fx.ipd_path;
  cfg.ald_path = fx.ald_path;
  cfg.em_columns = {"X1", "X2"};
  cfg.seed = 4242;
  cfg.n_star = 120;
  cfg.boot_b = 60;
  cfg.syntheses = 24;
  cfg.mcmc.iters = 600;
  cfg.mcmc.warmup = 300;
  return cfg;
}

}  // namespace

TEST_CASE("patient-level reader accepts the documented header and row shape") {
  IpdFile f = parse_ipd(
      "X1,X2,X3,X4,trt,y\n"
      "0.1,0.2,0.3,0.4,1,1\n"
      "-0.5,0.1,0.0,0.2,0,0\n"
      "0.0,0.0,0.0,0.0,1,0\n");
  CHECK(!f.is_survival);
  CHECK(f.n() == 3);
  CHECK(f.k() == 4);
  CHECK(f.binary.covariate_names[3] == "X4");
  CHECK(f.binary.x(1, 0) == -0.5);
  CHECK(f.binary.treatment == std::vector<int>{1, 0, 1});
  CHECK(f.binary.y == std::vector<int>{1, 0, 0});
}

TEST_CASE("patient-level reader rejects bad schemas and bad cells") {
  CHECK_THROWS_AS(parse_ipd("X1,X2,y\n0.1,0.2,1\n"), SchemaError);          // no trt
  CHECK_THROWS_AS(parse_ipd("X1,trt\n0.1,1\n"), SchemaError);               // no outcome
  CHECK_THROWS_AS(parse_ipd("X1,X3,trt,y\n0.1,0.2,1,1\n"), SchemaError);    // gap in X block
  CHECK_THROWS_AS(parse_ipd("trt,y\n1,1\n"), SchemaError);                  // no covariates
  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n"), SchemaError);                    // no data rows
  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n0.1,1\n"), SchemaError);             // short row
  CHECK_THROWS_AS(parse_ipd("X1,trt,y,time,event\n0.1,1,1,2,0\n"), SchemaError);
  CHECK_THROWS_AS(parse_ipd("X1,X1,trt,y\n0.1,0.2,1,1\n"), SchemaError);    // duplicate

  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n0.1,2,1\n"), ValueError);   // trt not binary
  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n0.1,1,0.5\n"), ValueError); // y not binary
  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n0.1,1,oops\n"), ValueError);
  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n,1,1\n"), MissingDataError);
  CHECK_THROWS_AS(parse_ipd("X1,trt,y\n0.1,1,NA\n"), MissingDataError);
}

TEST_CASE("patient-level reader handles the survival schema") {
  IpdFile f = parse_ipd(
      "X1,trt,time,event\n"
      "0.2,1,4.5,1\n"
      "0.1,0,2.0,0\n");
  CHECK(f.is_survival);
  CHECK(f.n() == 2);
  CHECK(f.survival.time[0] == 4.5);
  CHECK(f.survival.event == std::vector<int>{1, 0});
}

TEST_CASE("aggregate reader parses the dotted single-row layout") {
  AggregateData ald = parse_ald(
      "mean.X1,sd.X1,mean.X2,sd.X2,y.B.sum,N.B,y.C.sum,N.C\n"
      "0.6,0.4,0.55,0.38,120,300,90,300\n",
      {"X2"});
  CHECK(ald.k() == 2);
  CHECK(ald.means[1] == 0.55);
  CHECK(ald.sds[0] == 0.4);
  CHECK(ald.effect_modifier == std::vector<bool>{false, true});
  CHECK(ald.y_b == 120.0);
  CHECK(ald.n_c == 300.0);
}

TEST_CASE("aggregate reader enforces the documented failure modes") {
  const std::string ok_header = "mean.X1,sd.X1,y.B.sum,N.B,y.C.sum,N.C\n";
  CHECK_THROWS_AS(parse_ald("mean.X1,y.B.sum,N.B,y.C.sum,N.C\n0.6,1,2,1,2\n", {}),
                  SchemaError);  // sd.X1 missing
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,0.4,301,300,90,300\n", {}),
                  ValueError);  // y > N
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,0,120,300,90,300\n", {}), ValueError);  // sd 0
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,-0.4,120,300,90,300\n", {}), ValueError);
  CHECK_THROWS_AS(parse_ald(ok_header, {}), SchemaError);  // no data row
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,0.4,120,300,90,300\n0.6,0.4,120,300,90,300\n", {}),
                  SchemaError);  // two rows
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,0.4,120,300,,300\n", {}), MissingDataError);
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,0.4,120,300,90,300\n", {"X7"}), SchemaError);
  CHECK_THROWS_AS(parse_ald(ok_header + "0.6,0.4,120,300,90,300\n", {"X1", "X1"}), ConfigError);
}

TEST_CASE("pseudo-population description survives a JSON round-trip unchanged") {
  PopulationSpec spec;
  MarginalSpec a;
  a.family = MarginalFamily::normal;
  a.mean = -0.62;
  a.sd = 0.4;
  MarginalSpec b;
  b.family = MarginalFamily::bernoulli;
  b.proportion = 0.3;
  MarginalSpec c;
  c.family = MarginalFamily::gamma;
  c.mean = 2.5;
  c.sd = 0.8;
  MarginalSpec d;
  d.family = MarginalFamily::truncated_normal;
  d.mean = 0.5 + 0.1 + 0.2;  // deliberately non-representable sum
  d.sd = 1.0;
  d.lower = -1.0;
  d.upper = 2.0;
  spec.marginals = {a, b, c, d};
  spec.n_star = 777;
  spec.correlation = Matrix::identity(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) spec.correlation(i, j) = 0.2;

  const std::string text = population_to_json(spec);
  PopulationSpec back = population_from_json(text);
  CHECK(back.n_star == 777);
  REQUIRE(back.marginals.size() == 4);
  CHECK(back.marginals[0].mean == spec.marginals[0].mean);
  CHECK(back.marginals[1].family == MarginalFamily::bernoulli);
  CHECK(back.marginals[1].proportion == 0.3);
  CHECK(back.marginals[3].mean == spec.marginals[3].mean);
  CHECK(back.marginals[3].upper == 2.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(back.correlation(i, j) == spec.correlation(i, j));
  CHECK(population_to_json(back) == text);

  CHECK_THROWS_AS(population_from_json("{"), SchemaError);
  CHECK_THROWS_AS(population_from_json("{\"n_star\":1,\"marginals\":[],\"correlation\":[]}"),
                  ConfigError);  // no covariates is rejected downstream
  std::string bad = text;
  bad.replace(bad.find("normal"), 6, "cauchy");
  CHECK_THROWS_AS(population_from_json(bad), ValueError);
}

TEST_CASE("analysis configuration names its missing pieces") {
  AnalysisConfig cfg;
  cfg.ipd_path = "a.csv";
  cfg.ald_path = "b.csv";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // seed unset
  cfg.seed = 1;
  cfg.ipd_path.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.ipd_path = "a.csv";
  cfg.method = Method::mim;
  cfg.syntheses = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("one estimator run renders a complete, reproducible document") {
  Fixture fx;
  AnalysisConfig cfg = fixture_config(fx, Method::gcomp_ml);
  const std::string doc = run_analysis(cfg);
  CHECK(run_analysis(cfg) == doc);  // byte-identical rerun

  auto j = nlohmann::json::parse(doc);
  CHECK(j["method"] == "gcomp-ml");
  CHECK(j["estimand"] == "marginal");
  CHECK(j["scale"] == "log-OR");
  CHECK(std::isfinite(j["delta_AB"].get<double>()));
  CHECK(j["var_AB"].get<double>() > 0.0);
  CHECK(j["delta_AB"].get<double>() ==
        doctest::Approx(j["delta_AC"].get<double>() - j["delta_BC"].get<double>())
            .epsilon(1e-12));
  CHECK(j["ci95"].size() == 2);
  CHECK(j["ci95"][0].get<double>() < j["ci95"][1].get<double>());
  CHECK(j["seed"] == 4242);
  CHECK(j["config"]["seed"] == 4242);
  CHECK(j["config"]["effect_modifiers"].size() == 2);
  CHECK(j["inputs"]["ipd_rows"] == 140);
  CHECK(j["diagnostics"]["total_resamples"] == 60);
  CHECK(j["versions"]["library"] == kLibraryVersion);
}

TEST_CASE("the conditional-scale method is tagged and carries its warning") {
  Fixture fx;
  const std::string doc = run_analysis(fixture_config(fx, Method::stc));
  auto j = nlohmann::json::parse(doc);
  CHECK(j["method"] == "stc");
  CHECK(j["estimand"] == "conditional");
  REQUIRE(j["warnings"].size() >= 1);
  CHECK(j["warnings"][0].get<std::string>().find("population") != std::string::npos);
}

TEST_CASE("the sampling-based methods surface their diagnostics") {
  Fixture fx;
  auto jb = nlohmann::json::parse(run_analysis(fixture_config(fx, Method::gcomp_bayes)));
  CHECK(jb["diagnostics"]["rhat_max"].get<double>() >= 1.0);
  CHECK(jb["diagnostics"]["rhat_max"].get<double>() <= 1.1);
  CHECK(jb["diagnostics"]["ess_min"].get<double>() > 0.0);

  auto jm = nlohmann::json::parse(run_analysis(fixture_config(fx, Method::mim)));
  CHECK(jm["method"] == "mim");
  CHECK(jm["diagnostics"]["total_resamples"] == 24);
  CHECK(std::isfinite(jm["delta_AB"].get<double>()));
}

TEST_CASE("different seeds move the randomized estimates") {
  Fixture fx;
  AnalysisConfig cfg = fixture_config(fx, Method::gcomp_ml);
  auto j1 = nlohmann::json::parse(run_analysis(cfg));
  cfg.seed = 4243;
  auto j2 = nlohmann::json::parse(run_analysis(cfg));
  // both the pseudo-population draw and the bootstrap hang off the seed
  CHECK(j1["delta_AB"].get<double>() != j2["delta_AB"].get<double>());
  CHECK(j1["ci95"][0].get<double>() != j2["ci95"][0].get<double>());
}

TEST_CASE("failure documents carry the machine-readable kind") {
  const std::string doc = error_document(ZeroCellError("bc_log_or: empty cell"));
  auto j = nlohmann::json::parse(doc);
  CHECK(j["error"]["kind"] == "ZeroCellError");
  CHECK(j["error"]["message"].get<std::string>().find("empty cell") != std::string::npos);
  CHECK(j["versions"]["result_format"] == kResultFormatVersion);
}

TEST_CASE("raw-estimates tables read back exactly what the writer emitted") {
  ScenarioConfig cfg;
  cfg.n_ac = 150;
  cfg.n_bc = 200;
  SimOptions opt;
  opt.seed = 77;
  opt.n_reps = 3;
  opt.boot_b = 40;
  ScenarioResult res = run_scenario(cfg, {Method::maic, Method::stc}, opt);

  std::ostringstream os;
  write_raw_estimates(os, res);
  std::istringstream in(os.str());
  std::vector<RawEstimateRow> rows = read_raw_estimates(in, "mem");
  REQUIRE(rows.size() == 6);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t mi = 0; mi < 2; ++mi) {
      const RawEstimateRow& row = rows[2 * r + mi];
      const MethodResult& mr = res.replicates[r].methods[mi];
      CHECK(row.scenario == 0);
      CHECK(row.replicate == r);
      CHECK(row.ok == mr.ok);
      if (mr.ok) {
        CHECK(row.estimate.point == mr.estimate.point);
        CHECK(row.estimate.ci_upper == mr.estimate.ci_upper);
      }
    }
  CHECK(rows[0].method == "maic");
  CHECK(rows[1].method == "stc");

  std::istringstream bad("not\ta\theader\n");
  CHECK_THROWS_AS(read_raw_estimates(bad, "mem"), SchemaError);
}

TEST_CASE("survival inputs are rejected by the anchored binary-outcome flow") {
  const std::string path = "io_fixture_surv.csv";
  {
    std::ofstream out(path);
    out << "X1,trt,time,event\n0.2,1,4.5,1\n0.1,0,2.0,0\n0.3,1,1.5,1\n";
  }
  Fixture fx;
  AnalysisConfig cfg = fixture_config(fx, Method::gcomp_ml);
  cfg.ipd_path = path;
  CHECK_THROWS_AS(run_analysis(cfg), ConfigError);
  std::remove(path.c_str());
}
