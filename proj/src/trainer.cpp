#include "milrisk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "milrisk/errors.hpp"
#include "milrisk/metrics.hpp"

namespace milrisk {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool uses_estimator(Method m) { return m == Method::imil || m == Method::bimil; }

EstimatorConfig effective_estimator(const TrainConfig& config) {
  EstimatorConfig e = config.estimator;
  if (config.method == Method::imil) e.penalty_weight = 0.0;
  return e;
}

double batch_objective(const TrainConfig& config, const Model& model, const BagSelection& batch,
                       std::vector<double>& grad) {
  const EstimatorConfig est = effective_estimator(config);
  switch (config.method) {
    case Method::sup:
      return supervised_risk(model, est.loss, batch, &grad);
    case Method::imil:
      return unbiased_risk(model, est, batch, &grad).total;
    case Method::bimil:
      return bimil_objective(model, est, batch, &grad).total;
    case Method::milr:
      return milr_bag_loss(model, batch, config.alpha, &grad);
  }
  return kNaN;
}

double objective_from_scores(const TrainConfig& config, const BagSelection& bags,
                             const BagScores& scores) {
  const EstimatorConfig est = effective_estimator(config);
  switch (config.method) {
    case Method::sup:
      return supervised_risk_from_scores(est.loss, bags, scores, nullptr);
    case Method::imil:
      return unbiased_risk_from_scores(est, bags, scores, nullptr).total;
    case Method::bimil:
      return bimil_objective_from_scores(est, bags, scores, nullptr).total;
    case Method::milr:
      return milr_bag_loss_from_scores(bags, scores, config.alpha, nullptr);
  }
  return kNaN;
}

double ru_or_nan(const EstimatorConfig& est, const BagSelection& bags, const BagScores& scores) {
  if (bags.negative_instances() == 0) return kNaN;
  return unbiased_risk_from_scores(est, bags, scores, nullptr).total;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::sup:
      return "sup";
    case Method::imil:
      return "imil";
    case Method::bimil:
      return "bimil";
    case Method::milr:
      return "milr";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "sup") return Method::sup;
  if (text == "imil") return Method::imil;
  if (text == "bimil") return Method::bimil;
  if (text == "milr") return Method::milr;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected sup|imil|bimil|milr)");
}

void TrainConfig::validate() const {
  model_spec.validate();
  if (method != Method::milr) estimator.validate();
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(optimizer.decay >= 0.0 && optimizer.decay < 1.0)) {
    throw ConfigError("rmsprop decay must lie in [0, 1)");
  }
  if (!(optimizer.epsilon >= 0.0)) throw ConfigError("rmsprop epsilon must be >= 0");
  if (!std::isfinite(alpha)) throw ConfigError("alpha must be finite");
}

std::optional<double> TrainHistory::best_test_instance_bayes() const {
  std::optional<double> best;
  for (const auto& r : records) {
    if (r.test_instance_bayes && (!best || *r.test_instance_bayes < *best)) {
      best = r.test_instance_bayes;
    }
  }
  return best;
}

std::vector<std::vector<std::size_t>> make_batches(const BagDataset& data, std::size_t batch_bags,
                                                   Rng& rng, bool require_negative) {
  const std::size_t total = data.bag_count();
  if (total == 0) throw ContractError("make_batches: empty dataset");
  if (require_negative && data.negative_bags() == 0) {
    throw EstimatorUndefined("dataset has no negative bags; the unbiased estimator is undefined");
  }
  if (batch_bags > total) {
    throw ConfigError("batch size " + std::to_string(batch_bags) + " exceeds bag count " +
                      std::to_string(total));
  }
  const std::size_t per = batch_bags == 0 ? total : batch_bags;
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < total; start += per) {
    const std::size_t end = std::min(total, start + per);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (!require_negative) return batches;
  if (data.negative_bags() < batches.size()) {
    throw ConfigError("only " + std::to_string(data.negative_bags()) + " negative bags for " +
                      std::to_string(batches.size()) + " batches; increase the batch size");
  }

  auto is_neg = [&](std::size_t idx) { return data.bag(idx).label == 0; };
  auto neg_count = [&](const std::vector<std::size_t>& b) {
    return static_cast<std::size_t>(std::count_if(b.begin(), b.end(), is_neg));
  };
  std::size_t donor = 0;
  for (auto& batch : batches) {
    if (neg_count(batch) > 0) continue;
    while (neg_count(batches[donor]) < 2) ++donor;
    auto& from = batches[donor];
    const auto it = std::find_if(from.begin(), from.end(), is_neg);
    std::swap(*it, batch.front());
  }
  return batches;
}

TrainResult train(const TrainConfig& config, const BagDataset& train_set,
                  const BagDataset& test_set, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ContractError("training set is empty");
  if (test_set.empty()) throw ContractError("test set is empty");
  if (train_set.dim() != config.model_spec.input_dim) {
    throw ShapeError("training features have dimension " + std::to_string(train_set.dim()) +
                     ", model expects " + std::to_string(config.model_spec.input_dim));
  }
  if (config.method == Method::sup && !train_set.fully_labeled()) {
    throw ContractError("method sup requires instance labels on the training set");
  }
  if (uses_estimator(config.method) && train_set.negative_bags() == 0) {
    throw EstimatorUndefined("training set has no negative bags");
  }

  const EstimatorConfig est = effective_estimator(config);
  const bool train_labeled = train_set.fully_labeled();
  const bool test_labeled = test_set.fully_labeled();
  const BagSelection train_all(train_set);
  const BagSelection test_all(test_set);

  Model model = Model::init(config.model_spec);
  OptimizerState opt(config.optimizer, model.param_count());
  Rng rng(config.seed);
  std::vector<double> grad;

  TrainResult result{model, model, 0, {}};
  double best_objective = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(train_set, config.batch_bags, rng, uses_estimator(config.method));
    const std::uint64_t reads_before = label_read_count();
    for (const auto& indices : batches) {
      const BagSelection batch(train_set, indices);
      batch_objective(config, model, batch, grad);
      rmsprop_step(opt, model.mutable_params(), grad);
    }
    const std::uint64_t reads_after = label_read_count();
    if (!all_finite(model.params())) {
      throw NumericAbort("parameters became non-finite at epoch " + std::to_string(epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.objective_label_reads = reads_after - reads_before;
    const BagScores train_scores(model, train_all);
    const BagScores test_scores(model, test_all);
    rec.train_objective = objective_from_scores(config, train_all, train_scores);
    rec.train_ru = ru_or_nan(est, train_all, train_scores);
    rec.test_ru = ru_or_nan(est, test_all, test_scores);
    if (config.method == Method::sup && test_labeled) {
      rec.test_objective = supervised_risk_from_scores(est.loss, test_all, test_scores, nullptr);
    } else if (config.method == Method::milr) {
      rec.test_objective = milr_bag_loss_from_scores(test_all, test_scores, config.alpha, nullptr);
    } else if (config.method == Method::bimil) {
      // The penalty is a sum over bags; rescale it to the bags seen per step so
      // the selection objective weighs it as training did.
      const double per_step = config.batch_bags == 0
                                  ? static_cast<double>(train_set.bag_count())
                                  : static_cast<double>(std::min(config.batch_bags, train_set.bag_count()));
      const double penalty = constraint_penalty_from_scores(est.loss, test_all, test_scores, nullptr).penalty;
      rec.test_objective =
          rec.test_ru + est.penalty_weight * (per_step / static_cast<double>(test_set.bag_count())) * penalty;
    } else {
      rec.test_objective = rec.test_ru;
    }
    if (train_labeled) rec.train_instance_bayes = instance_bayes_risk_from_scores(train_all, train_scores);
    if (test_labeled) rec.test_instance_bayes = instance_bayes_risk_from_scores(test_all, test_scores);
    rec.test_bag_bayes = bag_bayes_risk_from_scores(est.loss, test_all, test_scores);

    if (std::isfinite(rec.test_objective) && rec.test_objective < best_objective) {
      best_objective = rec.test_objective;
      result.best_model = model;
      result.best_epoch = epoch;
    }
    result.history.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace milrisk
