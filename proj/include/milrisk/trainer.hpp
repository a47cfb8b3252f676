#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "milrisk/data.hpp"
#include "milrisk/model.hpp"
#include "milrisk/risk.hpp"

namespace milrisk {

// sup: supervised empirical risk (needs instance labels)
// imil: unbiased estimator only
// bimil: unbiased estimator + C * bag-constraint hinge penalty
// milr: softmax_alpha-pooled bag log-likelihood
enum class Method { sup, imil, bimil, milr };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct TrainConfig {
  Method method = Method::imil;
  EstimatorConfig estimator;
  ModelSpec model_spec;
  std::size_t epochs = 200;
  std::size_t batch_bags = 0;  // 0 = full batch
  double alpha = 3.0;          // milr only
  std::uint64_t seed = 0;      // batch order
  RmsPropConfig optimizer;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_objective = 0.0;
  double train_ru = 0.0;
  double test_ru = 0.0;
  // Label-free selection score on the test bags: sup uses the supervised risk,
  // milr its bag loss, imil the estimator, bimil the estimator plus the penalty
  // scaled to the bags per training step.
  double test_objective = 0.0;
  std::optional<double> train_instance_bayes;
  std::optional<double> test_instance_bayes;
  double test_bag_bayes = 0.0;
  // True-label reads made while computing training gradients this epoch.
  std::uint64_t objective_label_reads = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;

  // Smallest recorded test instance Bayes risk, if tracked.
  std::optional<double> best_test_instance_bayes() const;
};

struct TrainResult {
  Model final_model;
  Model best_model;  // checkpoint with the smallest test objective
  std::size_t best_epoch = 0;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shuffled partition of bag indices into batches of `batch_bags` (0 = one
// batch). With `require_negative`, bags are swapped so every batch holds at
// least one negative bag.
std::vector<std::vector<std::size_t>> make_batches(const BagDataset& data, std::size_t batch_bags,
                                                   Rng& rng, bool require_negative);

// Test objective used for checkpoint selection: supervised risk for sup (or
// the unbiased risk when test labels are absent), the unbiased risk for
// imil/bimil, and the bag loss for milr.
TrainResult train(const TrainConfig& config, const BagDataset& train_set,
                  const BagDataset& test_set, const EpochCallback& on_epoch = {});

}  // namespace milrisk
