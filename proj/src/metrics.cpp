#include "milrisk/metrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "milrisk/errors.hpp"

namespace milrisk {

double instance_bayes_risk_from_scores(const BagSelection& bags, const BagScores& scores) {
  if (bags.instance_count() == 0) throw ContractError("instance_bayes_risk: no instances");
  std::size_t wrong = 0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto s = scores.bag(b);
    for (std::size_t i = 0; i < s.size(); ++i) {
      wrong += predict_label(s[i]) != bags[b].instances[i].true_label() ? 1 : 0;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(bags.instance_count());
}

double instance_bayes_risk(const Model& model, const BagDataset& data) {
  const BagSelection all(data);
  return instance_bayes_risk_from_scores(all, BagScores(model, all));
}

double bag_bayes_risk_from_scores(LossKind loss, const BagSelection& bags,
                                  const BagScores& scores) {
  if (bags.size() == 0) throw ContractError("bag_bayes_risk: no bags");
  std::size_t wrong = 0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const int predicted = bag_margin_from_scores(loss, scores.bag(b)).margin > 0.0 ? 1 : 0;
    wrong += predicted != bags[b].label ? 1 : 0;
  }
  return static_cast<double>(wrong) / static_cast<double>(bags.size());
}

double bag_bayes_risk(const Model& model, const BagDataset& data, LossKind loss) {
  const BagSelection all(data);
  return bag_bayes_risk_from_scores(loss, all, BagScores(model, all));
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.std_error = s.stddev / std::sqrt(static_cast<double>(values.size()));
    s.ci95_radius = 1.96 * s.std_error;
  }
  return s;
}

ChiSquareResult chi_square_uniform(std::span<const std::size_t> counts) {
  if (counts.size() < 2) throw ContractError("chi-square needs at least two categories");
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) throw ContractError("chi-square: no observations");
  const double expected = total / static_cast<double>(counts.size());
  ChiSquareResult r;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    r.statistic += d * d / expected;
  }
  r.dof = static_cast<double>(counts.size() - 1);
  const boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

}  // namespace milrisk
