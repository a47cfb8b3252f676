#include "milrisk/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "milrisk/errors.hpp"

namespace milrisk {

std::vector<double> central_difference_gradient(std::span<const double> params,
                                                const ParamObjective& objective, double h) {
  if (!(h > 0.0)) throw ContractError("finite-difference step must be positive");
  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> numeric(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = objective(probe);
    probe[i] = saved - h;
    const double down = objective(probe);
    probe[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  return numeric;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw ShapeError("gradient lengths differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

double grad_check(const Model& model, LossKind loss, std::span<const Instance> batch, double h) {
  if (batch.empty()) throw ContractError("grad_check: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());

  std::vector<double> analytic(model.param_count(), 0.0);
  for (const auto& inst : batch) {
    const double s = model.forward(inst.features());
    model.accumulate_gradient(inst.features(), inv * loss_grad(loss, s, inst.true_label()),
                              analytic);
  }

  const ParamObjective mean_loss = [&](std::span<const double> p) {
    const Model probe(model.spec(), std::vector<double>(p.begin(), p.end()));
    double sum = 0.0;
    for (const auto& inst : batch) {
      sum += loss_value(loss, probe.forward(inst.features()), inst.true_label());
    }
    return sum * inv;
  };
  const auto numeric = central_difference_gradient(model.params(), mean_loss, h);
  return max_relative_error(analytic, numeric);
}

}  // namespace milrisk
