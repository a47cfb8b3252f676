#pragma once

// Labeled instance pools and the bag construction procedure.
//
// Negative bag: size n ~ U{1..9}, n draws with replacement from the negative
// pool. Positive bag: n ~ U{1..9}, k ~ U{1..n}; k positives and n - k
// negatives with replacement, then shuffled.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "milrisk/data.hpp"

namespace milrisk {

inline constexpr int kMaxBagSize = 9;

struct InstancePool {
  std::vector<std::vector<double>> features;
  int label = 0;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
};

struct Pools {
  InstancePool positive{{}, 1};
  InstancePool negative{{}, 0};

  std::size_t dim() const;
};

struct GaussianPoolConfig {
  std::size_t dim = 2;
  std::vector<double> pos_mean{2.0, 0.0};
  std::vector<double> neg_mean{-2.0, 0.0};
  double covariance_scale = 1.0;  // per-coordinate standard deviation
  std::size_t pos_pool_size = 10000;
  std::size_t neg_pool_size = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Means at (+separation, 0, ...) and (-separation, 0, ...).
GaussianPoolConfig symmetric_gaussian_config(std::size_t dim, double separation, double scale,
                                             std::size_t pool_size, std::uint64_t seed);

Pools make_gaussian_pools(const GaussianPoolConfig& config);

Bag sample_negative_bag(const InstancePool& negatives, Rng& rng);
Bag sample_positive_bag(const InstancePool& positives, const InstancePool& negatives, Rng& rng);

// Negative bags first, then positive bags; deterministic given seed.
BagDataset generate_bag_set(const Pools& pools, std::size_t n_pos_bags, std::size_t n_neg_bags,
                            std::uint64_t seed);

// Fraction of instances whose true label is 0.
double true_pi0(const BagDataset& data);

// Population P(Y_x = 0) implied by the procedure with equal bag counts:
// (E[n] + E[n - k]) / (2 E[n]) = 0.7 for sizes U{1..9}.
double analytic_pi0(int max_bag_size = kMaxBagSize);

// Deterministic split of each pool (fraction to `first`, rest to `second`).
std::pair<Pools, Pools> split_pools(const Pools& pools, double first_fraction,
                                    std::uint64_t seed);

// Digits mapped to the positive class, parsed from "0-4" or "0,2,7".
struct DigitPartition {
  std::vector<bool> positive = std::vector<bool>(10, false);

  static DigitPartition parse(const std::string& text);
  bool is_positive(int digit) const { return positive.at(static_cast<std::size_t>(digit)); }
};

// IDX image/label files (magic 0x00000803 / 0x00000801). Pixels scaled to
// [0, 1]; digits mapped through `partition`.
Pools load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const DigitPartition& partition);

// Numeric CSV, one instance per row. `label_column` is a header name or a
// zero-based index. Labels must be 0 or 1.
Pools load_csv(const std::filesystem::path& path, const std::string& label_column,
               bool has_header);

}  // namespace milrisk
