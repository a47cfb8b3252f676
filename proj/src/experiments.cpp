#include "milrisk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "milrisk/errors.hpp"
#include "milrisk/metrics.hpp"

namespace milrisk {
namespace {

Json stats_json(const SummaryStats& s) {
  return Json{{"count", s.count},
              {"mean", number_or_marker(s.mean)},
              {"std", number_or_marker(s.stddev)},
              {"se", number_or_marker(s.std_error)},
              {"ci95_radius", number_or_marker(s.ci95_radius)}};
}

// Exact instance risk under the population mixture of the two pools.
double pool_risk(const Model& model, LossKind loss, const Pools& pools, double pi0) {
  auto mean_loss = [&](const InstancePool& pool, int y) {
    std::vector<double> terms;
    terms.reserve(pool.size());
    for (const auto& x : pool.features) terms.push_back(loss_value(loss, model.forward(x), y));
    return pairwise_sum(terms) / static_cast<double>(pool.size());
  };
  return pi0 * mean_loss(pools.negative, 0) + (1.0 - pi0) * mean_loss(pools.positive, 1);
}

Model random_model_in_ball(const ModelSpec& family, double radius, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> params(param_count(family));
  double norm = 0.0;
  for (double& p : params) {
    p = z(rng);
    norm += p * p;
  }
  norm = std::sqrt(norm);
  const double r = radius * std::pow(u(rng), 1.0 / static_cast<double>(params.size()));
  for (double& p : params) p *= r / norm;
  return Model(family, std::move(params));
}

// Test instance Bayes risk at the checkpoint epoch.
double checkpoint_bayes(const TrainResult& result) {
  if (result.best_epoch == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto& rec = result.history.records[result.best_epoch - 1];
  return rec.test_instance_bayes.value_or(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

Json ExperimentReport::to_json() const {
  Json table = Json::array();
  for (const auto& row : rows) {
    Json r = Json::object();
    for (std::size_t i = 0; i < columns.size() && i < row.size(); ++i) {
      r[columns[i]] = number_or_marker(row[i]);
    }
    table.push_back(std::move(r));
  }
  return Json{{"experiment", id}, {"config", config}, {"summary", summary}, {"points", table}};
}

std::string ExperimentReport::to_csv() const { return milrisk::to_csv(columns, rows); }

void ExperimentReport::write(const std::filesystem::path& dir) const {
  write_text_atomic(dir / (id + ".json"), to_json().dump(2) + "\n");
  write_text_atomic(dir / (id + ".csv"), to_csv());
}

// ---------------------------------------------------------------------------

ExperimentReport unbiasedness_experiment(const Model& model, const Pools& pools,
                                         const BagCounts& counts,
                                         const EstimatorConfig& config,
                                         const UnbiasednessOptions& options) {
  config.validate();
  if (options.replicates < 100) throw ContractError("unbiasedness experiment needs >= 100 replicates");
  if (counts.negative == 0) throw EstimatorUndefined("unbiasedness experiment needs negative bags");
  if (pools.positive.empty() || pools.negative.empty()) {
    throw ContractError("unbiasedness experiment needs both pools");
  }

  ExperimentReport report;
  report.id = "unbiasedness";
  report.columns = {"replicate", "ru", "term_all_pos", "term_neg_correction", "measured_pi0"};
  std::vector<double> estimates;
  estimates.reserve(options.replicates);
  for (std::size_t r = 0; r < options.replicates; ++r) {
    const auto data =
        generate_bag_set(pools, counts.positive, counts.negative, derive_seed(options.seed, r));
    const auto risk = unbiased_risk(model, config, data);
    estimates.push_back(risk.total);
    report.rows.push_back({static_cast<double>(r), risk.total, risk.term_all_pos,
                           risk.term_neg_correction, true_pi0(data)});
  }

  // Labeled oracle sample from the instance mixture.
  Rng rng(derive_seed(options.seed, 0xFFFF'FFFFull));
  std::bernoulli_distribution negative(options.population_pi0);
  std::uniform_int_distribution<std::size_t> pick_neg(0, pools.negative.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_pos(0, pools.positive.size() - 1);
  std::vector<double> oracle_terms;
  oracle_terms.reserve(options.oracle_samples);
  for (std::size_t i = 0; i < options.oracle_samples; ++i) {
    const bool neg = negative(rng);
    const auto& x = neg ? pools.negative.features[pick_neg(rng)] : pools.positive.features[pick_pos(rng)];
    oracle_terms.push_back(loss_value(config.loss, model.forward(x), neg ? 0 : 1));
  }
  const auto oracle = summarize(oracle_terms);
  const auto est = summarize(estimates);
  const double bias = est.mean - oracle.mean;
  const double se = std::sqrt(est.std_error * est.std_error + oracle.std_error * oracle.std_error);

  report.config = Json{{"replicates", options.replicates},
                       {"positive_bags", counts.positive},
                       {"negative_bags", counts.negative},
                       {"oracle_samples", options.oracle_samples},
                       {"population_pi0", options.population_pi0},
                       {"estimator_pi0", config.pi0},
                       {"loss", std::string(to_string(config.loss))},
                       {"seed", options.seed},
                       {"model", milrisk::to_json(model.spec())},
                       {"params", std::vector<double>(model.params().begin(), model.params().end())}};
  report.summary = Json{{"mean_ru", est.mean},
                        {"oracle_risk", oracle.mean},
                        {"exact_pool_risk", pool_risk(model, config.loss, pools, options.population_pi0)},
                        {"bias", bias},
                        {"se_mean", est.std_error},
                        {"se_oracle", oracle.std_error},
                        {"se_combined", se},
                        {"z", bias / se},
                        {"within_4se", std::abs(bias) <= 4.0 * se},
                        {"ru_stats", stats_json(est)}};
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport deviation_vs_m(const ModelSpec& family, const Pools& pools,
                                const EstimatorConfig& config, const DeviationOptions& options) {
  config.validate();
  const auto& sizes = options.negative_instance_targets;
  if (sizes.empty()) throw ContractError("deviation_vs_m: no sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw ContractError("deviation_vs_m: sizes must increase strictly");
  }
  if (options.models == 0 || options.replicates == 0) {
    throw ContractError("deviation_vs_m: need at least one model and one replicate");
  }

  Rng model_rng(derive_seed(options.seed, 0xABCDull));
  std::vector<Model> models;
  std::vector<double> population_risk;
  for (std::size_t k = 0; k < options.models; ++k) {
    models.push_back(random_model_in_ball(family, options.radius, model_rng));
    population_risk.push_back(pool_risk(models.back(), config.loss, pools, options.population_pi0));
  }

  const double mean_bag_size = (kMaxBagSize + 1) / 2.0;
  ExperimentReport report;
  report.id = "deviation";
  report.columns = {"m_target", "mean_m", "mean_deviation", "se_deviation", "max_deviation"};
  std::vector<double> means;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const auto bags =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sizes[si] / mean_bag_size)));
    std::vector<double> deviations;
    double m_sum = 0.0;
    for (std::size_t r = 0; r < options.replicates; ++r) {
      const auto data =
          generate_bag_set(pools, bags, bags, derive_seed(options.seed, si * 1'000'003ull + r));
      m_sum += static_cast<double>(data.negative_instances());
      double worst = 0.0;
      for (std::size_t k = 0; k < models.size(); ++k) {
        const double ru = unbiased_risk(models[k], config, data).total;
        worst = std::max(worst, std::abs(population_risk[k] - ru));
      }
      deviations.push_back(worst);
    }
    const auto s = summarize(deviations);
    means.push_back(s.mean);
    report.rows.push_back({static_cast<double>(sizes[si]), m_sum / options.replicates, s.mean,
                           s.std_error, *std::max_element(deviations.begin(), deviations.end())});
  }

  Json ratios = Json::array();
  bool decreasing = true;
  for (std::size_t i = 1; i < means.size(); ++i) {
    ratios.push_back(means[i - 1] / means[i]);
    decreasing = decreasing && means[i] < means[i - 1];
  }
  report.config = Json{{"sizes", sizes},
                       {"replicates", options.replicates},
                       {"models", options.models},
                       {"radius", options.radius},
                       {"population_pi0", options.population_pi0},
                       {"estimator_pi0", config.pi0},
                       {"loss", std::string(to_string(config.loss))},
                       {"seed", options.seed},
                       {"family", milrisk::to_json(family)}};
  const auto bound = loss_bound(config.loss);
  report.summary = Json{{"ratios", ratios},
                        {"strictly_decreasing", decreasing},
                        {"triangle_bound",
                         bound ? Json((1.0 + 2.0 * config.pi0) * *bound) : Json(nullptr)}};
  return report;
}

// ---------------------------------------------------------------------------

std::vector<double> default_pi0_grid() { return parse_grid("0.5:0.9:0.05"); }

std::vector<double> parse_grid(const std::string& text) {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  char c1 = 0;
  char c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0) || hi < lo) {
    throw ConfigError("bad grid '" + text + "' (expected lo:hi:step)");
  }
  std::vector<double> grid;
  const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  for (long long i = 0; i <= count; ++i) {
    // Round to 12 decimals so 0.5 + 4 * 0.05 prints as 0.7.
    grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  for (double g : grid) {
    if (g < 0.0 || g > 1.0) throw ConfigError("grid values must lie in [0, 1]");
  }
  return grid;
}

ExperimentReport pi0_sweep(const BagDataset& train_set, const BagDataset& test_set,
                           const std::vector<double>& grid, const TrainConfig& base) {
  if (grid.empty()) throw ConfigError("pi0 sweep: empty grid");
  const double measured = true_pi0(train_set);
  ExperimentReport report;
  report.id = "pi0_sweep";
  report.columns = {"pi0", "best_test_instance_bayes", "checkpoint_test_instance_bayes"};

  auto run = [&](double pi0) -> std::pair<double, double> {
    TrainConfig cfg = base;
    cfg.method = Method::imil;
    cfg.estimator.pi0 = pi0;
    const auto result = train(cfg, train_set, test_set);
    const double best = result.history.best_test_instance_bayes().value_or(
        std::numeric_limits<double>::quiet_NaN());
    return {best, checkpoint_bayes(result)};
  };

  double grid_min = std::numeric_limits<double>::infinity();
  double argmin = 0.0;
  for (double g : grid) {
    const auto [best, ckpt] = run(g);
    report.rows.push_back({g, best, ckpt});
    if (best < grid_min) {
      grid_min = best;
      argmin = g;
    }
  }
  const auto [at_true, ckpt_at_true] = run(measured);

  // Over- vs under-estimation: compare grid points equidistant from the truth.
  Json asymmetry = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double under = measured - grid[i];
      const double over = grid[j] - measured;
      if (under > 0.0 && over > 0.0 && std::abs(under - over) < 0.026) {
        asymmetry.push_back(Json{{"under", grid[i]},
                                 {"over", grid[j]},
                                 {"under_risk", report.rows[i][1]},
                                 {"over_risk", report.rows[j][1]}});
      }
    }
  }

  report.config = Json{{"grid", grid}, {"train", milrisk::to_json(base)}};
  report.summary = Json{{"measured_true_pi0", measured},
                        {"risk_at_true_pi0", at_true},
                        {"checkpoint_risk_at_true_pi0", ckpt_at_true},
                        {"grid_min", grid_min},
                        {"grid_argmin", argmin},
                        {"gap_to_grid_min", at_true - grid_min},
                        {"over_vs_under", asymmetry}};
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport loss_divergence_study(const BagDataset& train_set, const BagDataset& test_set,
                                       const TrainConfig& base) {
  TrainConfig mse_cfg = base;
  mse_cfg.method = Method::imil;
  mse_cfg.estimator.loss = LossKind::mse;
  TrainConfig ce_cfg = mse_cfg;
  ce_cfg.estimator.loss = LossKind::ce;

  const auto mse = train(mse_cfg, train_set, test_set);
  const auto ce = train(ce_cfg, train_set, test_set);

  ExperimentReport report;
  report.id = "loss_study";
  report.columns = {"epoch",       "mse_train_ru", "mse_test_ru", "mse_test_instance_bayes",
                    "ce_train_ru", "ce_test_ru",   "ce_test_instance_bayes"};
  const double pi0 = base.estimator.pi0;
  bool mse_contained = true;
  std::optional<std::size_t> ce_below;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t e = 0; e < base.epochs; ++e) {
    const auto& a = mse.history.records[e];
    const auto& b = ce.history.records[e];
    report.rows.push_back({static_cast<double>(a.epoch), a.train_ru, a.test_ru,
                           a.test_instance_bayes.value_or(nan), b.train_ru, b.test_ru,
                           b.test_instance_bayes.value_or(nan)});
    mse_contained = mse_contained && a.train_ru >= -pi0 && a.train_ru <= 1.0 + pi0;
    if (!ce_below && b.train_ru < -1.0) ce_below = b.epoch;
  }
  report.config = Json{{"train", milrisk::to_json(base)}};
  report.summary = Json{{"mse_train_ru_within_bounds", mse_contained},
                        {"bounds", Json::array({-pi0, 1.0 + pi0})},
                        {"ce_first_epoch_train_ru_below_minus_1",
                         ce_below ? Json(*ce_below) : Json(nullptr)},
                        {"mse_checkpoint_epoch", mse.best_epoch},
                        {"ce_checkpoint_epoch", ce.best_epoch},
                        {"mse_checkpoint_test_instance_bayes", number_or_marker(checkpoint_bayes(mse))},
                        {"ce_checkpoint_test_instance_bayes", number_or_marker(checkpoint_bayes(ce))},
                        {"mse_best_test_instance_bayes",
                         number_or_marker(mse.history.best_test_instance_bayes().value_or(nan))},
                        {"ce_best_test_instance_bayes",
                         number_or_marker(ce.history.best_test_instance_bayes().value_or(nan))}};
  return report;
}

}  // namespace milrisk
