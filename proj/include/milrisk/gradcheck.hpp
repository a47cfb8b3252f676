#pragma once

#include <functional>
#include <span>
#include <vector>

#include "milrisk/data.hpp"
#include "milrisk/losses.hpp"
#include "milrisk/model.hpp"

namespace milrisk {

using ParamObjective = std::function<double(std::span<const double> params)>;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every parameter.
std::vector<double> central_difference_gradient(std::span<const double> params,
                                                const ParamObjective& objective, double h);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-8).
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

// Analytic gradient of the mean loss over `batch` (true labels required)
// against central differences. Returns the max relative error.
double grad_check(const Model& model, LossKind loss, std::span<const Instance> batch, double h);

}  // namespace milrisk
