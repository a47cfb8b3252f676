#pragma once

// Verification experiments. Each returns an ExperimentReport whose config
// block holds every seed needed to reproduce it bit for bit.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "milrisk/datagen.hpp"
#include "milrisk/io.hpp"
#include "milrisk/model.hpp"
#include "milrisk/risk.hpp"
#include "milrisk/trainer.hpp"

namespace milrisk {

struct ExperimentReport {
  std::string id;
  Json config = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  Json summary = Json::object();

  Json to_json() const;
  std::string to_csv() const;
  // Writes <dir>/<id>.json and <dir>/<id>.csv.
  void write(const std::filesystem::path& dir) const;
};

struct BagCounts {
  std::size_t positive = 200;
  std::size_t negative = 200;
};

struct UnbiasednessOptions {
  std::size_t replicates = 500;
  std::size_t oracle_samples = 1'000'000;
  // Mixture weight of negatives in the labeled oracle sample.
  double population_pi0 = analytic_pi0();
  std::uint64_t seed = 1;
};

// Mean of the label-free estimate over regenerated bag sets against the
// supervised risk on a large labeled sample. Summary: mean_ru, oracle_risk,
// bias, se_mean, se_oracle, se_combined = sqrt(se_mean^2 + se_oracle^2),
// z = bias / se_combined. Requires replicates >= 100.
ExperimentReport unbiasedness_experiment(const Model& model, const Pools& pools,
                                         const BagCounts& counts,
                                         const EstimatorConfig& config,
                                         const UnbiasednessOptions& options);

struct DeviationOptions {
  std::vector<std::size_t> negative_instance_targets{400, 800, 1600, 3200, 6400};
  std::size_t replicates = 200;
  std::size_t models = 50;
  double radius = 3.0;  // models drawn uniformly from this parameter ball
  double population_pi0 = analytic_pi0();
  std::uint64_t seed = 1;
};

// For each target m, the mean over replicates of max over random models of
// |R_L(f) - R^u(f)|, with R_L taken as the exact expectation over the pools.
// Rows: m_target, mean_m, mean_deviation, se_deviation.
ExperimentReport deviation_vs_m(const ModelSpec& family, const Pools& pools,
                                const EstimatorConfig& config, const DeviationOptions& options);

// Default grid 0.50, 0.55, ..., 0.90.
std::vector<double> default_pi0_grid();
std::vector<double> parse_grid(const std::string& text);  // "lo:hi:step"

// Trains IMIL once per grid value and once at the measured true pi0 of the
// training set. Rows (grid only): pi0, best_test_instance_bayes,
// checkpoint_test_instance_bayes. The measured-pi0 run goes in the summary.
ExperimentReport pi0_sweep(const BagDataset& train_set, const BagDataset& test_set,
                           const std::vector<double>& grid, const TrainConfig& base);

// IMIL under mse and ce with otherwise identical settings. Rows are epochs.
// Summary flags the first epoch where the ce train R^u drops below -1.
ExperimentReport loss_divergence_study(const BagDataset& train_set, const BagDataset& test_set,
                                       const TrainConfig& base);

}  // namespace milrisk
