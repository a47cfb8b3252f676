#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace milrisk {

using Rng = std::mt19937_64;

// splitmix64 finalizer over (seed, index): independent per-task seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Number of true-label reads since process start. Training code for the
// label-free learners must never advance it.
std::uint64_t label_read_count();

class Instance {
 public:
  Instance() = default;
  Instance(std::vector<double> features, std::optional<int> true_label)
      : features_(std::move(features)), true_label_(true_label) {}

  std::span<const double> features() const { return features_; }
  std::size_t dim() const { return features_.size(); }

  bool has_label() const { return true_label_.has_value(); }

  // Hidden ground truth. Throws ContractError when absent. Every call is
  // counted by label_read_count().
  int true_label() const;
  std::optional<int> true_label_or_none() const;

 private:
  std::vector<double> features_;
  std::optional<int> true_label_;
};

struct Bag {
  std::vector<Instance> instances;
  int label = 0;

  std::size_t size() const { return instances.size(); }
};

// Bags plus cached instance counts: n in positive bags, m in negative bags.
class BagDataset {
 public:
  BagDataset() = default;
  explicit BagDataset(std::vector<Bag> bags);

  const std::vector<Bag>& bags() const { return bags_; }
  const Bag& bag(std::size_t i) const { return bags_[i]; }
  std::size_t bag_count() const { return bags_.size(); }
  bool empty() const { return bags_.empty(); }

  std::size_t positive_instances() const { return n_pos_; }
  std::size_t negative_instances() const { return n_neg_; }
  std::size_t instance_count() const { return n_pos_ + n_neg_; }
  std::size_t positive_bags() const { return pos_bags_; }
  std::size_t negative_bags() const { return bags_.size() - pos_bags_; }
  std::size_t dim() const { return dim_; }

  // True when every instance carries a true label (does not count as a read).
  bool fully_labeled() const;

  // Checks the standard MIL assumption against the true labels: negative bags
  // hold only negatives, positive bags hold at least one positive.
  bool satisfies_mil_assumption() const;

 private:
  std::vector<Bag> bags_;
  std::size_t n_pos_ = 0;
  std::size_t n_neg_ = 0;
  std::size_t pos_bags_ = 0;
  std::size_t dim_ = 0;
};

// A view over a subset of a dataset's bags (a mini-batch, or all of them).
class BagSelection {
 public:
  explicit BagSelection(const BagDataset& data);
  BagSelection(const BagDataset& data, std::span<const std::size_t> indices);

  std::size_t size() const { return bags_.size(); }
  const Bag& operator[](std::size_t i) const { return *bags_[i]; }
  std::size_t instance_count() const { return n_pos_ + n_neg_; }
  std::size_t negative_instances() const { return n_neg_; }

 private:
  std::vector<const Bag*> bags_;
  std::size_t n_pos_ = 0;
  std::size_t n_neg_ = 0;
};

// Sum with a fixed pairwise tree order.
double pairwise_sum(std::span<const double> values);

}  // namespace milrisk
