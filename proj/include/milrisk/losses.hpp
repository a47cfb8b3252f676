#pragma once

#include <optional>
#include <string_view>

namespace milrisk {

// Surrogate losses L(f(x), y) over raw scores, with w = sigmoid(score).
//   mse:      (w - y)^2, bounded by M = 1
//   ce:       -y log w - (1 - y) log(1 - w), unbounded
//   zero_one: I(pred(score) != y), evaluation only
enum class LossKind { mse, ce, zero_one };

std::string_view to_string(LossKind kind);
LossKind parse_loss(std::string_view text);

// Upper bound M of the loss, or nullopt when unbounded.
std::optional<double> loss_bound(LossKind kind);

double sigmoid(double score);

// pred(s) = I(s > 0); s == 0 predicts 0.
inline int predict_label(double score) { return score > 0.0 ? 1 : 0; }

double loss_value(LossKind kind, double score, int label);

// dL/dscore. Throws UnsupportedGradient for zero_one.
double loss_grad(LossKind kind, double score, int label);

struct ConsistencyReport {
  double phi_prime_at_zero = 0.0;
  bool is_consistent = false;
  std::optional<double> bound;
};

// Finite-difference check of Phi'(0) < 0 for the margin form Phi of the loss:
// mse -> (1/2 - x)^2, ce -> log(1 + e^{-x}). Throws ContractError for zero_one.
ConsistencyReport bayes_consistency_report(LossKind kind);

}  // namespace milrisk
