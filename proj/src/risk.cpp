#include "milrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "milrisk/errors.hpp"

namespace milrisk {
namespace {

constexpr double kProbClamp = 1e-12;

void reset_coeffs(std::vector<double>* coeffs, const BagScores& scores) {
  if (coeffs) coeffs->assign(scores.all().size(), 0.0);
}

template <typename ValueFn>
double with_gradient(const Model& model, const BagSelection& bags, std::vector<double>* grad,
                     ValueFn&& fn) {
  const BagScores scores(model, bags);
  std::vector<double> coeffs;
  const double value = fn(scores, grad ? &coeffs : nullptr);
  if (grad) backpropagate_scores(model, bags, coeffs, *grad);
  return value;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) {
    throw ConfigError("pi0 must lie in [0, 1], got " + std::to_string(pi0));
  }
  if (!(penalty_weight >= 0.0) || !std::isfinite(penalty_weight)) {
    throw ConfigError("penalty weight C must be finite and >= 0");
  }
  if (loss == LossKind::zero_one) {
    throw ConfigError("the estimator needs a surrogate loss (mse or ce)");
  }
}

BagScores::BagScores(const Model& model, const BagSelection& bags) {
  offsets_.reserve(bags.size() + 1);
  offsets_.push_back(0);
  values_.reserve(bags.instance_count());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    for (const auto& inst : bags[b].instances) values_.push_back(model.forward(inst.features()));
    offsets_.push_back(values_.size());
  }
}

void backpropagate_scores(const Model& model, const BagSelection& bags,
                          std::span<const double> coeffs, std::vector<double>& grad) {
  grad.assign(model.param_count(), 0.0);
  std::size_t k = 0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    for (const auto& inst : bags[b].instances) {
      const double c = coeffs[k++];
      if (c != 0.0) model.accumulate_gradient(inst.features(), c, grad);
    }
  }
}

// ---------------------------------------------------------------------------
// supervised

double supervised_risk_from_scores(LossKind loss, const BagSelection& bags,
                                   const BagScores& scores, std::vector<double>* coeffs) {
  const std::size_t total = bags.instance_count();
  if (total == 0) throw ContractError("supervised_risk: no instances");
  reset_coeffs(coeffs, scores);
  std::vector<double> terms;
  terms.reserve(total);
  const double inv = 1.0 / static_cast<double>(total);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto s = scores.bag(b);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const int y = bags[b].instances[i].true_label();
      terms.push_back(loss_value(loss, s[i], y));
      if (coeffs) (*coeffs)[scores.offset(b) + i] = inv * loss_grad(loss, s[i], y);
    }
  }
  return pairwise_sum(terms) / static_cast<double>(total);
}

double supervised_risk(const Model& model, LossKind loss, const BagSelection& bags,
                       std::vector<double>* grad) {
  return with_gradient(model, bags, grad, [&](const BagScores& s, std::vector<double>* c) {
    return supervised_risk_from_scores(loss, bags, s, c);
  });
}

double supervised_risk(const Model& model, LossKind loss, const BagDataset& data) {
  return supervised_risk(model, loss, BagSelection(data), nullptr);
}

// ---------------------------------------------------------------------------
// unbiased estimator

RiskBreakdown unbiased_risk_from_scores(const EstimatorConfig& config, const BagSelection& bags,
                                        const BagScores& scores, std::vector<double>* coeffs) {
  const std::size_t total = bags.instance_count();
  const std::size_t neg = bags.negative_instances();
  if (neg == 0) {
    throw EstimatorUndefined("unbiased risk needs at least one negative-bag instance");
  }
  reset_coeffs(coeffs, scores);
  const LossKind loss = config.loss;
  const double inv_all = 1.0 / static_cast<double>(total);
  const double w_neg = config.pi0 / static_cast<double>(neg);

  // Loss sums kept apart by instance group so the total can be formed without
  // subtracting L1 back out: with pi0 = 1 on all-negative data the L1
  // coefficient is exactly zero and the estimate is the plain mean of L0.
  std::vector<double> pos_l1;
  std::vector<double> neg_l1;
  std::vector<double> neg_l0;
  pos_l1.reserve(total - neg);
  neg_l1.reserve(neg);
  neg_l0.reserve(neg);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const bool negative_bag = bags[b].label == 0;
    const auto s = scores.bag(b);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double l1 = loss_value(loss, s[i], 1);
      double c = 0.0;
      if (coeffs) c = inv_all * loss_grad(loss, s[i], 1);
      if (negative_bag) {
        neg_l1.push_back(l1);
        neg_l0.push_back(loss_value(loss, s[i], 0));
        if (coeffs) c += w_neg * (loss_grad(loss, s[i], 0) - loss_grad(loss, s[i], 1));
      } else {
        pos_l1.push_back(l1);
      }
      if (coeffs) (*coeffs)[scores.offset(b) + i] = c;
    }
  }
  const double n = static_cast<double>(total);
  const double m = static_cast<double>(neg);
  const double sp1 = pairwise_sum(pos_l1);
  const double sn1 = pairwise_sum(neg_l1);
  const double sn0 = pairwise_sum(neg_l0);
  RiskBreakdown r;
  r.term_all_pos = (sp1 + sn1) / n;
  r.term_neg_correction = config.pi0 * ((sn0 - sn1) / m);
  r.total = sp1 / n + (sn1 / n - config.pi0 * sn1 / m) + config.pi0 * sn0 / m;
  return r;
}

RiskBreakdown unbiased_risk(const Model& model, const EstimatorConfig& config,
                            const BagSelection& bags, std::vector<double>* grad) {
  config.validate();
  RiskBreakdown out;
  with_gradient(model, bags, grad, [&](const BagScores& s, std::vector<double>* c) {
    out = unbiased_risk_from_scores(config, bags, s, c);
    return out.total;
  });
  return out;
}

RiskBreakdown unbiased_risk(const Model& model, const EstimatorConfig& config,
                            const BagDataset& data) {
  return unbiased_risk(model, config, BagSelection(data), nullptr);
}

// ---------------------------------------------------------------------------
// bag constraints

BagMargin bag_margin_from_scores(LossKind loss, std::span<const double> scores) {
  if (scores.empty()) throw ContractError("bag_margin: empty bag");
  BagMargin best{loss_value(loss, scores[0], 0) - loss_value(loss, scores[0], 1), 0};
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const double d = loss_value(loss, scores[i], 0) - loss_value(loss, scores[i], 1);
    if (d > best.margin) best = {d, i};
  }
  return best;
}

BagMargin bag_margin(const Model& model, LossKind loss, const Bag& bag) {
  if (bag.instances.empty()) throw ContractError("bag_margin: empty bag");
  std::vector<double> scores;
  scores.reserve(bag.size());
  for (const auto& inst : bag.instances) scores.push_back(model.forward(inst.features()));
  return bag_margin_from_scores(loss, scores);
}

PenaltyResult constraint_penalty_from_scores(LossKind loss, const BagSelection& bags,
                                             const BagScores& scores,
                                             std::vector<double>* coeffs) {
  reset_coeffs(coeffs, scores);
  PenaltyResult out;
  out.slacks.reserve(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto m = bag_margin_from_scores(loss, scores.bag(b));
    const bool negative_bag = bags[b].label == 0;
    // Negative bags want margin < 0, positive bags margin > 0.
    const double signed_margin = negative_bag ? m.margin : -m.margin;
    const double slack = std::max(0.0, signed_margin);
    out.slacks.push_back(slack);
    if (coeffs && signed_margin > 0.0) {
      const double s = scores.bag(b)[m.argmax];
      const double d = loss_grad(loss, s, 0) - loss_grad(loss, s, 1);
      (*coeffs)[scores.offset(b) + m.argmax] = negative_bag ? d : -d;
    }
  }
  out.penalty = pairwise_sum(out.slacks);
  return out;
}

PenaltyResult constraint_penalty(const Model& model, LossKind loss, const BagSelection& bags,
                                 std::vector<double>* grad) {
  PenaltyResult out;
  with_gradient(model, bags, grad, [&](const BagScores& s, std::vector<double>* c) {
    out = constraint_penalty_from_scores(loss, bags, s, c);
    return out.penalty;
  });
  return out;
}

PenaltyResult constraint_penalty(const Model& model, LossKind loss, const BagDataset& data) {
  if (data.empty()) throw ContractError("constraint_penalty: empty dataset");
  return constraint_penalty(model, loss, BagSelection(data), nullptr);
}

RiskBreakdown bimil_objective_from_scores(const EstimatorConfig& config, const BagSelection& bags,
                                          const BagScores& scores, std::vector<double>* coeffs) {
  RiskBreakdown r = unbiased_risk_from_scores(config, bags, scores, coeffs);
  std::vector<double> penalty_coeffs;
  const auto p =
      constraint_penalty_from_scores(config.loss, bags, scores, coeffs ? &penalty_coeffs : nullptr);
  r.penalty = p.penalty;
  r.total += config.penalty_weight * p.penalty;
  if (coeffs) {
    for (std::size_t i = 0; i < coeffs->size(); ++i) {
      (*coeffs)[i] += config.penalty_weight * penalty_coeffs[i];
    }
  }
  return r;
}

RiskBreakdown bimil_objective(const Model& model, const EstimatorConfig& config,
                              const BagSelection& bags, std::vector<double>* grad) {
  config.validate();
  RiskBreakdown out;
  with_gradient(model, bags, grad, [&](const BagScores& s, std::vector<double>* c) {
    out = bimil_objective_from_scores(config, bags, s, c);
    return out.total;
  });
  return out;
}

RiskBreakdown bimil_objective(const Model& model, const EstimatorConfig& config,
                              const BagDataset& data) {
  return bimil_objective(model, config, BagSelection(data), nullptr);
}

// ---------------------------------------------------------------------------
// MILR

double softmax_alpha(std::span<const double> values, double alpha) {
  if (values.empty()) throw ContractError("softmax_alpha: empty list");
  double shift = alpha * values[0];
  for (double v : values) shift = std::max(shift, alpha * v);
  double num = 0.0;
  double den = 0.0;
  for (double v : values) {
    const double e = std::exp(alpha * v - shift);
    num += v * e;
    den += e;
  }
  return num / den;
}

double softmax_alpha_grad(std::span<const double> values, double alpha, std::span<double> out) {
  const double s = softmax_alpha(values, alpha);
  double shift = alpha * values[0];
  for (double v : values) shift = std::max(shift, alpha * v);
  double den = 0.0;
  for (double v : values) den += std::exp(alpha * v - shift);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double p = std::exp(alpha * values[k] - shift) / den;
    out[k] = p * (1.0 + alpha * (values[k] - s));
  }
  return s;
}

double milr_bag_loss_from_scores(const BagSelection& bags, const BagScores& scores, double alpha,
                                 std::vector<double>* coeffs) {
  if (bags.size() == 0) throw ContractError("milr_bag_loss: no bags");
  reset_coeffs(coeffs, scores);
  const double inv_bags = 1.0 / static_cast<double>(bags.size());
  std::vector<double> terms;
  terms.reserve(bags.size());
  std::vector<double> probs;
  std::vector<double> dpool;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto s = scores.bag(b);
    probs.resize(s.size());
    dpool.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) probs[i] = sigmoid(s[i]);
    const double raw = softmax_alpha_grad(probs, alpha, dpool);
    const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
    const bool positive = bags[b].label == 1;
    terms.push_back(positive ? -std::log(p) : -std::log1p(-p));
    if (coeffs && p == raw) {
      const double dp = positive ? -1.0 / p : 1.0 / (1.0 - p);
      for (std::size_t i = 0; i < s.size(); ++i) {
        (*coeffs)[scores.offset(b) + i] =
            inv_bags * dp * dpool[i] * probs[i] * (1.0 - probs[i]);
      }
    }
  }
  return pairwise_sum(terms) * inv_bags;
}

double milr_bag_loss(const Model& model, const BagSelection& bags, double alpha,
                     std::vector<double>* grad) {
  return with_gradient(model, bags, grad, [&](const BagScores& s, std::vector<double>* c) {
    return milr_bag_loss_from_scores(bags, s, alpha, c);
  });
}

double milr_bag_loss(const Model& model, const BagDataset& data, double alpha) {
  return milr_bag_loss(model, BagSelection(data), alpha, nullptr);
}

}  // namespace milrisk
