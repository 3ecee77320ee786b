#ifndef POPADJUST_IO_HPP
#define POPADJUST_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "popadjust/data.hpp"
#include "popadjust/mcmc.hpp"
#include "popadjust/population.hpp"
#include "popadjust/simstudy.hpp"

namespace popadjust {

inline constexpr const char* kLibraryVersion = "popadjust 1.0.0";
inline constexpr const char* kResultFormatVersion = "1";

/// Patient-level CSV. The header names K covariate columns X1..XK plus a
/// treatment indicator `trt`, and either a binary outcome column `y` or a
/// survival pair `time`,`event`. Plain comma separation, no quoting; columns
/// outside the schema are ignored.
struct IpdFile {
  IpdDataset binary;
  SurvivalData survival;
  bool is_survival = false;

  std::size_t n() const { return is_survival ? survival.n() : binary.n(); }
  std::size_t k() const { return is_survival ? survival.k() : binary.k(); }
};

IpdFile read_ipd(const std::string& path);
IpdFile read_ipd_csv(std::istream& in, const std::string& origin);

/// Aggregate-summary CSV with a single data row: mean.X1, sd.X1, ...,
/// y.B.sum, N.B, y.C.sum, N.C. `em_columns` names the covariates treated as
/// effect modifiers (e.g. {"X1","X3"}).
AggregateData read_ald(const std::string& path, const std::vector<std::string>& em_columns);
AggregateData read_ald_csv(std::istream& in, const std::string& origin,
                           const std::vector<std::string>& em_columns);

/// Pseudo-population description as JSON; to/from round-trips losslessly.
std::string population_to_json(const PopulationSpec& spec);
PopulationSpec population_from_json(const std::string& text);

struct AnalysisConfig {
  Method method = Method::maic;
  std::string ipd_path;
  std::string ald_path;
  std::vector<std::string> em_columns;
  std::size_t n_star = 1000;
  std::size_t boot_b = 1000;
  std::size_t syntheses = 1000;
  PriorSpec prior;
  McmcConfig mcmc;  // defaults: 2 chains, 4000 iterations, 2000 warmup
  std::optional<std::uint64_t> seed;
  std::string output_path;  // empty -> stdout only

  void validate() const;
};

/// Runs the configured estimator against the two input files, anchors it
/// through the aggregate outcome counts, and renders the result document.
/// Identical configurations render byte-identical JSON.
std::string run_analysis(const AnalysisConfig& cfg);

/// Structured failure document for nonzero exits.
std::string error_document(const Error& e);
std::string error_document(const std::string& kind, const std::string& message);

/// One line of a persisted raw-estimates table.
struct RawEstimateRow {
  std::size_t scenario = 0;
  std::size_t replicate = 0;
  std::string method;
  bool ok = false;
  EffectEstimate estimate;
  std::string error;
};

/// Parses a table previously produced by write_raw_estimates.
std::vector<RawEstimateRow> read_raw_estimates(std::istream& in, const std::string& origin);

}  // namespace popadjust

#endif
