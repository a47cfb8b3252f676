#include "milrisk/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "milrisk/errors.hpp"

namespace milrisk {
namespace {

// log(1 + e^{x}) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double phi(LossKind kind, double x) {
  if (kind == LossKind::mse) return (0.5 - x) * (0.5 - x);
  return softplus(-x);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mse:
      return "mse";
    case LossKind::ce:
      return "ce";
    case LossKind::zero_one:
      return "zero_one";
  }
  return "unknown";
}

LossKind parse_loss(std::string_view text) {
  if (text == "mse") return LossKind::mse;
  if (text == "ce") return LossKind::ce;
  if (text == "zero_one" || text == "01") return LossKind::zero_one;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected mse|ce)");
}

std::optional<double> loss_bound(LossKind kind) {
  if (kind == LossKind::ce) return std::nullopt;
  return 1.0;
}

double sigmoid(double score) {
  if (score >= 0.0) return 1.0 / (1.0 + std::exp(-score));
  const double e = std::exp(score);
  return e / (1.0 + e);
}

double loss_value(LossKind kind, double score, int label) {
  switch (kind) {
    case LossKind::mse: {
      // |w - y| = sigmoid of the signed score, avoiding 1 - w cancellation
      const double d = sigmoid(label == 1 ? -score : score);
      return d * d;
    }
    case LossKind::ce:
      // log(1 + e^{-(2y-1)s})
      return softplus(label == 1 ? -score : score);
    case LossKind::zero_one:
      return predict_label(score) != label ? 1.0 : 0.0;
  }
  return 0.0;
}

double loss_grad(LossKind kind, double score, int label) {
  const double w = sigmoid(score);
  switch (kind) {
    case LossKind::mse:
    {
      const double v = sigmoid(-score);  // 1 - w
      return label == 1 ? -2.0 * v * w * v : 2.0 * w * w * v;
    }
    case LossKind::ce:
      return w - label;
    case LossKind::zero_one:
      break;
  }
  throw UnsupportedGradient("the zero-one loss has no gradient");
}

ConsistencyReport bayes_consistency_report(LossKind kind) {
  if (kind == LossKind::zero_one) {
    throw ContractError("zero_one is the target risk, not a surrogate loss");
  }
  constexpr double h = 1e-6;
  ConsistencyReport report;
  report.phi_prime_at_zero = (phi(kind, h) - phi(kind, -h)) / (2.0 * h);
  report.is_consistent = report.phi_prime_at_zero < 0.0;
  report.bound = loss_bound(kind);
  return report;
}

}  // namespace milrisk
