#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsmcmc/corrector.hpp"
#include "tsmcmc/datasets.hpp"
#include "tsmcmc/density.hpp"
#include "tsmcmc/external.hpp"
#include "tsmcmc/generators.hpp"
#include "tsmcmc/metrics.hpp"

namespace tsmcmc::app {

struct DatasetSpec {
  enum class Kind { Lorenz, Csv } kind = Kind::Lorenz;
  LorenzConfig lorenz;
  std::filesystem::path csv_path;
  CsvSchema schema;
  bool normalize = true;
};

struct SourceSpec {
  enum class Kind { Var, Bootstrap, Biased, External } kind = Kind::Var;
  std::size_t var_order = 1;
  std::size_t context_len = 0;  // 0: windowing p
  // biased
  std::shared_ptr<SourceSpec> inner;
  std::optional<std::vector<double>> drift;  // absolute, in normalized units
  double drift_diff_std = 0.0;               // multiple of per-dim std of first differences
  double drift_series_std = 0.0;             // multiple of per-dim std of the series
  double noise_scale = 1.0;
  // external
  ExternalSourceConfig external;
};

struct RunConfig {
  DatasetSpec dataset;
  std::size_t p = 16;
  std::size_t q = 32;
  std::size_t stride = 1;
  DensityConfig density;
  std::optional<std::filesystem::path> density_path;
  SourceSpec source;
  CorrectionConfig correction;
  MetricsConfig metrics;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> gen_path;
  std::size_t workers = 0;  // 0: hardware concurrency

  /// Resolved configuration with every default filled in.
  nlohmann::json to_json() const;
};

/// Parses and validates. Any problem (unknown keys are ignored) is reported
/// as ConfigInvalid, including referenced files that do not exist.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
void validate_config(const RunConfig& cfg);

/// The (normalized) real series plus its normalizer.
struct PreparedData {
  TimeSeries native;
  TimeSeries series;
  std::optional<Normalizer> normalizer;
};
PreparedData prepare_data(const RunConfig& cfg);

std::unique_ptr<ProposalSource> build_source(const SourceSpec& spec, const TimeSeries& series, std::size_t p);

/// Density from density_path when set, otherwise fitted on the series.
DiffDensity obtain_density(const RunConfig& cfg, const TimeSeries& series);

struct SeedOutcome {
  std::uint64_t seed = 0;
  TimeSeries raw;
  CorrectionRun run;
  MetricsReport raw_report;
  MetricsReport corrected_report;
};

/// Raw rollout, correction and both evaluations for one seed.
SeedOutcome run_seed(const RunConfig& cfg, const PreparedData& data, const TargetDensity& density,
                     std::uint64_t seed);

/// mean and population std over seeds for each scalar metric, raw vs corrected.
nlohmann::json summarize(const std::vector<nlohmann::json>& seed_reports);

int cmd_simulate(const RunConfig& cfg);
int cmd_fit_density(const RunConfig& cfg);
int cmd_generate(const RunConfig& cfg);
int cmd_correct(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);
/// Writes the verification report to stdout (and to <out>/theory.json when
/// `out` is given). Returns 4 when any check fails.
int cmd_verify_theory(std::uint64_t seed, const std::optional<std::filesystem::path>& out);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitTheory = 4;

}  // namespace tsmcmc::app
