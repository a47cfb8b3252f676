#include "milrisk/data.hpp"

#include <string>

#include "milrisk/errors.hpp"

namespace milrisk {
namespace {

std::atomic<std::uint64_t> g_label_reads{0};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t label_read_count() { return g_label_reads.load(std::memory_order_relaxed); }

int Instance::true_label() const {
  g_label_reads.fetch_add(1, std::memory_order_relaxed);
  if (!true_label_) throw ContractError("instance has no true label");
  return *true_label_;
}

std::optional<int> Instance::true_label_or_none() const {
  g_label_reads.fetch_add(1, std::memory_order_relaxed);
  return true_label_;
}

BagDataset::BagDataset(std::vector<Bag> bags) : bags_(std::move(bags)) {
  bool first = true;
  for (const auto& b : bags_) {
    if (b.instances.empty()) throw ContractError("bags must be non-empty");
    if (b.label != 0 && b.label != 1) throw ContractError("bag labels must be 0 or 1");
    for (const auto& inst : b.instances) {
      if (first) {
        dim_ = inst.dim();
        first = false;
      } else if (inst.dim() != dim_) {
        throw ShapeError("feature length varies within the dataset (" + std::to_string(dim_) +
                         " vs " + std::to_string(inst.dim()) + ")");
      }
    }
    if (b.label == 1) {
      n_pos_ += b.size();
      ++pos_bags_;
    } else {
      n_neg_ += b.size();
    }
  }
}

bool BagDataset::fully_labeled() const {
  for (const auto& b : bags_) {
    for (const auto& inst : b.instances) {
      if (!inst.has_label()) return false;
    }
  }
  return true;
}

bool BagDataset::satisfies_mil_assumption() const {
  for (const auto& b : bags_) {
    bool any_positive = false;
    for (const auto& inst : b.instances) {
      const int y = inst.true_label();
      if (b.label == 0 && y != 0) return false;
      any_positive = any_positive || y == 1;
    }
    if (b.label == 1 && !any_positive) return false;
  }
  return true;
}

BagSelection::BagSelection(const BagDataset& data) {
  bags_.reserve(data.bag_count());
  for (const auto& b : data.bags()) bags_.push_back(&b);
  n_pos_ = data.positive_instances();
  n_neg_ = data.negative_instances();
}

BagSelection::BagSelection(const BagDataset& data, std::span<const std::size_t> indices) {
  bags_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.bag_count()) throw ContractError("bag index out of range");
    const Bag& b = data.bag(i);
    bags_.push_back(&b);
    (b.label == 1 ? n_pos_ : n_neg_) += b.size();
  }
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace milrisk
