#pragma once

// Risk functionals over bag data, each with a parameter-gradient form.
//
// Gradient overloads take an optional output vector. When non-null it is
// resized to the model's parameter count and overwritten with d(value)/d(params).

#include <cstddef>
#include <span>
#include <vector>

#include "milrisk/data.hpp"
#include "milrisk/losses.hpp"
#include "milrisk/model.hpp"

namespace milrisk {

struct EstimatorConfig {
  double pi0 = 0.7;  // P(Y_x = 0)
  double penalty_weight = 10.0;
  LossKind loss = LossKind::mse;

  void validate() const;
};

// total = term_all_pos + term_neg_correction + C * penalty. The penalty is
// zero (and C unused) for the plain estimator.
struct RiskBreakdown {
  double total = 0.0;
  double term_all_pos = 0.0;
  double term_neg_correction = 0.0;
  double penalty = 0.0;
};

struct BagMargin {
  double margin = 0.0;
  std::size_t argmax = 0;
};

struct PenaltyResult {
  double penalty = 0.0;
  std::vector<double> slacks;  // one per bag, in selection order
};

// Scores f(x) of every instance in a selection, packed bag by bag.
class BagScores {
 public:
  BagScores(const Model& model, const BagSelection& bags);

  std::span<const double> bag(std::size_t i) const {
    return std::span<const double>(values_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  std::span<const double> all() const { return values_; }
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

 private:
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
};

// Mean L(f(x), y_x) over all instances. Reads true labels; ContractError when
// one is missing.
double supervised_risk(const Model& model, LossKind loss, const BagDataset& data);
double supervised_risk(const Model& model, LossKind loss, const BagSelection& bags,
                       std::vector<double>* grad);

// Label-free estimate of the instance risk:
//   (1/N) sum_{all x} L(f(x),1) + (pi0/m) sum_{x in S-} [L(f(x),0) - L(f(x),1)]
// Throws EstimatorUndefined when the selection has no negative instances.
RiskBreakdown unbiased_risk(const Model& model, const EstimatorConfig& config,
                            const BagDataset& data);
RiskBreakdown unbiased_risk(const Model& model, const EstimatorConfig& config,
                            const BagSelection& bags, std::vector<double>* grad);

// max over the bag of L(f(x),0) - L(f(x),1), with the first argmax.
BagMargin bag_margin(const Model& model, LossKind loss, const Bag& bag);
BagMargin bag_margin_from_scores(LossKind loss, std::span<const double> scores);

// Hinge slacks: negative bags max(0, margin), positive bags max(0, -margin).
PenaltyResult constraint_penalty(const Model& model, LossKind loss, const BagDataset& data);
PenaltyResult constraint_penalty(const Model& model, LossKind loss, const BagSelection& bags,
                                 std::vector<double>* grad);

// unbiased_risk + C * constraint_penalty.
RiskBreakdown bimil_objective(const Model& model, const EstimatorConfig& config,
                              const BagDataset& data);
RiskBreakdown bimil_objective(const Model& model, const EstimatorConfig& config,
                              const BagSelection& bags, std::vector<double>* grad);

// sum_i x_i e^{alpha x_i} / sum_i e^{alpha x_i}, max-shifted.
double softmax_alpha(std::span<const double> values, double alpha);
// Same value; writes d(value)/d(values[k]) into out.
double softmax_alpha_grad(std::span<const double> values, double alpha, std::span<double> out);

// MILR negative log-likelihood, mean over bags, with p_b = softmax_alpha of the
// instance probabilities clamped to [1e-12, 1 - 1e-12].
double milr_bag_loss(const Model& model, const BagDataset& data, double alpha);
double milr_bag_loss(const Model& model, const BagSelection& bags, double alpha,
                     std::vector<double>* grad);

// Score-level forms shared by the trainer and the evaluators. `coeffs`, when
// non-null, receives d(value)/d(score) laid out like `scores`.
double supervised_risk_from_scores(LossKind loss, const BagSelection& bags,
                                   const BagScores& scores, std::vector<double>* coeffs);
RiskBreakdown unbiased_risk_from_scores(const EstimatorConfig& config, const BagSelection& bags,
                                        const BagScores& scores, std::vector<double>* coeffs);
PenaltyResult constraint_penalty_from_scores(LossKind loss, const BagSelection& bags,
                                             const BagScores& scores,
                                             std::vector<double>* coeffs);
RiskBreakdown bimil_objective_from_scores(const EstimatorConfig& config, const BagSelection& bags,
                                          const BagScores& scores, std::vector<double>* coeffs);
double milr_bag_loss_from_scores(const BagSelection& bags, const BagScores& scores, double alpha,
                                 std::vector<double>* coeffs);

// grad = sum over instances of coeffs[i] * d f(x_i) / d params.
void backpropagate_scores(const Model& model, const BagSelection& bags,
                          std::span<const double> coeffs, std::vector<double>& grad);

}  // namespace milrisk
