#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "goodweights/dynamics.hpp"
#include "goodweights/forecast.hpp"
#include "goodweights/nnbaseline.hpp"
#include "goodweights/sampler.hpp"

namespace goodweights {

enum class ExperimentKind {
  Heatmap,
  PgSweep,
  EffectiveDim,
  WnormScaling,
  Suppression,
  BetaSweep,
  SamplerCompare,
  InvariantMeasure,
  NnCompare,
};

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);

/// Shared: one training set and one validation set for every realization.
/// PerRealization: realization m draws its own data from stream m, and the
/// same m sees the same data at every grid point.
enum class DataMode { Shared, PerRealization };

std::string_view to_string(DataMode m);
DataMode parse_data_mode(std::string_view s);

struct HeatmapSettings {
  double w_max = 0.4;
  double b_max = 4.0;
  int resolution = 10;
};

struct SuppressionSettings {
  /// Class of the rows that good rows successively replace.
  RowClass start = RowClass::Saturated;
  std::vector<long> stages{10, 50, 150};
};

struct InvariantSettings {
  double total_time = 2000.0;
  double burn_in = 40.0;
  int bins = 100;
  /// Length of the true-system run that estimates the reference histogram.
  double reference_time = 20000.0;
};

struct NnSettings {
  long steps = 50000;
  long checkpoint_every = 10000;
  NetInit init = NetInit::Glorot;
  SchedulerConfig scheduler;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::PgSweep;
  std::string name;
  std::uint64_t seed = 1;
  long realizations = 20;
  long n_train = 20000;
  /// Validation trajectories per realization; tau_f is their mean.
  long validation_runs = 1;
  DataMode data_mode = DataMode::PerRealization;
  /// Per-realization data only: realization m sees the same data at every
  /// configuration point. When false each point draws independent data.
  bool paired_data = true;
  std::vector<long> feature_dims{300};
  std::vector<double> p_good{1.0};
  std::vector<double> betas{4e-5};
  std::vector<SamplingAlgorithm> algorithms{SamplingAlgorithm::OneShot};
  std::vector<BadMix> bad_mixes{BadMix::Balanced};
  SamplerConfig sampler;
  ForecastConfig forecast;
  IntegratorConfig integrator;
  HeatmapSettings heatmap;
  SuppressionSettings suppression;
  InvariantSettings invariant;
  NnSettings nn;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// One CSV row. Fields that do not apply to a kind are NaN (written empty).
struct ResultRecord {
  std::string model = "rfm";  // "rfm" or "nn"
  long group = 0;             // index of the configuration point
  long realization = 0;
  std::uint64_t seed = 0;     // internal-weight seed of this realization
  std::uint64_t data_seed = 0;
  long feature_dim = 0;
  double p_good = 0.0;
  double beta = 0.0;
  std::string algorithm;
  std::string bad_mix;
  double w_scale = 0.0;
  double b_scale = 0.0;
  long n_train = 0;
  long stage = 0;  // replaced rows (suppression) or gradient step (nn)
  double tau_f = 0.0;
  long censored = 0;
  double loss = 0.0;
  double w_norm = 0.0;
  double effective_range = 0.0;
  RowClassCounts counts;
  double l1_x = 0.0;
  double l1_y = 0.0;
  double l1_z = 0.0;
  bool valid = true;
};

/// Per-column outcome of the row-replacement experiment.
struct ColumnRecord {
  long realization = 0;
  long stage = 0;
  long column = 0;
  RowClass row_class = RowClass::Good;
  double sup_norm = 0.0;
  double normalized_sup_norm = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ResultRecord> records;
  std::vector<ColumnRecord> columns;
  /// Histogram overlays (truth vs p_g values) from the first realization of
  /// an invariant-measure run.
  std::vector<std::pair<std::string, MarginalHistograms>> histograms;
  std::vector<std::string> errors;
  nlohmann::json summary;
};

struct RunOptions {
  int workers = 1;
  /// Record failing realizations and continue instead of stopping.
  bool keep_going = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Realization seeds: the internal weights of realization m at configuration
/// point g use derive_seed(derive_seed(seed, g), m). Shared data use
/// derive_seed(seed, kDataStream); paired per-realization data
/// derive_seed(derive_seed(seed, kDataStream), m); unpaired data mix g in
/// once more. Within a data seed, stream 0 is training and stream 1 + k the
/// k-th validation trajectory.
inline constexpr std::uint64_t kDataStream = 0xda7aULL;
std::uint64_t weights_seed(std::uint64_t master, long group, long realization);
std::uint64_t data_seed(const ExperimentConfig& cfg, long group, long realization);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Recomputes the summary from records (also used after reading a CSV back).
nlohmann::json summarize_records(const ExperimentConfig& cfg, const std::vector<ResultRecord>& records,
                                 const std::vector<ColumnRecord>& columns);

void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_results_csv(std::istream& is);
void write_columns_csv(std::ostream& os, const std::vector<ColumnRecord>& columns);

/// results.csv, summary.json, columns.csv / histograms.csv where applicable,
/// and SVG figures. Plot failures are reported in the returned list but never
/// affect the CSV/JSON outputs.
std::vector<std::string> write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace goodweights
