#pragma once

#include <cstddef>
#include <span>

#include "milrisk/data.hpp"
#include "milrisk/losses.hpp"
#include "milrisk/model.hpp"
#include "milrisk/risk.hpp"

namespace milrisk {

// Mean 0-1 loss of pred(f(x)) against true instance labels.
double instance_bayes_risk(const Model& model, const BagDataset& data);
double instance_bayes_risk_from_scores(const BagSelection& bags, const BagScores& scores);

// A bag is predicted positive iff its margin is > 0 (margin 0 predicts
// negative). Mean 0-1 loss against bag labels.
double bag_bayes_risk(const Model& model, const BagDataset& data, LossKind loss = LossKind::mse);
double bag_bayes_risk_from_scores(LossKind loss, const BagSelection& bags,
                                  const BagScores& scores);

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;     // sample (n - 1) standard deviation
  double std_error = 0.0;  // stddev / sqrt(n)
  double ci95_radius = 0.0;
};

SummaryStats summarize(std::span<const double> values);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 0.0;
};

// Goodness of fit of observed counts against equal expected frequencies.
ChiSquareResult chi_square_uniform(std::span<const std::size_t> counts);

}  // namespace milrisk
