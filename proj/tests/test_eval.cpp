#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "milrisk/datagen.hpp"
#include "milrisk/errors.hpp"
#include "milrisk/experiments.hpp"
#include "milrisk/metrics.hpp"
#include "oracle.hpp"

using namespace milrisk;
namespace fs = std::filesystem;

namespace {

Pools gaussian_pools(std::uint64_t seed, std::size_t size = 5000) {
  return make_gaussian_pools(symmetric_gaussian_config(2, 2.0, 1.0, size, seed));
}

ModelSpec linear2() {
  ModelSpec s;
  s.input_dim = 2;
  return s;
}

// Exact expectation over the pools of L(f(x),0) - L(f(x),1) for negatives.
double negative_correction(const Model& m, LossKind k, const Pools& pools) {
  double t = 0.0;
  for (const auto& x : pools.negative.features) {
    const double s = m.forward(x);
    t += oracle::loss(k, s, 0) - oracle::loss(k, s, 1);
  }
  return t / static_cast<double>(pools.negative.size());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("instance bayes risk") {
  const auto pools = gaussian_pools(1);
  const auto data = generate_bag_set(pools, 200, 200, 2);
  const Model constant_negative(linear2(), {0.0, 0.0, -1.0});
  CHECK(instance_bayes_risk(constant_negative, data) == doctest::Approx(1.0 - true_pi0(data)));

  const auto clean = make_gaussian_pools(symmetric_gaussian_config(2, 2.0, 0.0, 10, 3));
  const auto clean_bags = generate_bag_set(clean, 30, 30, 4);
  const Model perfect(linear2(), {1.0, 0.0, 0.0});
  CHECK(instance_bayes_risk(perfect, clean_bags) == 0.0);
  CHECK(bag_bayes_risk(perfect, clean_bags) == 0.0);
}

TEST_CASE("instance bayes risk equals the zero-one supervised risk") {
  std::mt19937_64 rng(9);
  const auto pools = gaussian_pools(5, 500);
  for (int t = 0; t < 30; ++t) {
    const auto data = generate_bag_set(pools, 10 + t, 10, t);
    ModelSpec spec = linear2();
    spec.hidden_dims = {3};
    const auto m = oracle::random_model(spec, rng, 2.0);
    CHECK(instance_bayes_risk(m, data) == supervised_risk(m, LossKind::zero_one, data));
  }
}

TEST_CASE("bag bayes risk examples") {
  const auto pools = gaussian_pools(2, 500);
  const auto data = generate_bag_set(pools, 70, 30, 1);
  const Model low(linear2(), {0.0, 0.0, -10.0});
  CHECK(bag_bayes_risk(low, data) == doctest::Approx(0.7));
  const Model zero(linear2(), {0.0, 0.0, 0.0});
  CHECK(bag_bayes_risk(zero, data) == doctest::Approx(0.7));
}

TEST_CASE("bag bayes risk ignores instance order") {
  std::mt19937_64 rng(4);
  const auto pools = gaussian_pools(3, 500);
  const auto data = generate_bag_set(pools, 40, 40, 3);
  std::vector<Bag> shuffled = data.bags();
  for (auto& b : shuffled) std::shuffle(b.instances.begin(), b.instances.end(), rng);
  const BagDataset other(shuffled);
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_model(linear2(), rng, 2.0);
    CHECK(bag_bayes_risk(m, data) == bag_bayes_risk(m, other));
  }
}

TEST_CASE("summary statistics and chi-square") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = summarize(v);
  CHECK(s.count == 5);
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.stddev == doctest::Approx(std::sqrt(2.5)));
  CHECK(s.std_error == doctest::Approx(std::sqrt(2.5) / std::sqrt(5.0)));
  CHECK(s.ci95_radius > s.std_error);

  const std::vector<std::size_t> flat(9, 1000);
  CHECK(chi_square_uniform(flat).statistic == 0.0);
  CHECK(chi_square_uniform(flat).p_value == doctest::Approx(1.0));
  // (50-25)^2/25 * 2 + ... for counts {50, 0, 25, 25}: expected 25 each.
  const std::vector<std::size_t> skew{50, 0, 25, 25};
  const auto c = chi_square_uniform(skew);
  CHECK(c.statistic == doctest::Approx(25.0 + 25.0));
  CHECK(c.dof == 3.0);
  CHECK(c.p_value < 1e-6);
}

TEST_CASE("unbiasedness experiment: unbiased at the true pi0") {
  const auto pools = gaussian_pools(11);
  std::mt19937_64 rng(1);
  const auto m = oracle::random_model(linear2(), rng, 1.0);
  EstimatorConfig cfg;
  cfg.pi0 = analytic_pi0();
  UnbiasednessOptions opt;
  opt.replicates = 200;
  opt.oracle_samples = 200000;
  opt.seed = 3;
  const auto r = unbiasedness_experiment(m, pools, {200, 200}, cfg, opt);
  CHECK(r.rows.size() == 200);
  CHECK(r.summary["within_4se"].get<bool>());
  opt.replicates = 99;
  CHECK_THROWS_AS(unbiasedness_experiment(m, pools, {200, 200}, cfg, opt), ContractError);
}

TEST_CASE("unbiasedness experiment: mis-specified pi0 is detected") {
  const auto pools = gaussian_pools(12);
  // Scores negatives as positive, so the negative-bag correction is positive
  // and over-weighting it (pi0 = 1 instead of 0.7) biases the estimate upward.
  const Model wrong_way(linear2(), {-1.0, 0.3, 0.0});
  REQUIRE(negative_correction(wrong_way, LossKind::mse, pools) > 0.0);
  EstimatorConfig cfg;
  cfg.pi0 = 1.0;
  UnbiasednessOptions opt;
  opt.replicates = 200;
  opt.oracle_samples = 200000;
  const auto r = unbiasedness_experiment(wrong_way, pools, {200, 200}, cfg, opt);
  const double expected_bias = (1.0 - analytic_pi0()) * negative_correction(wrong_way, LossKind::mse, pools);
  CHECK(r.summary["z"].get<double>() > 4.0);
  CHECK(r.summary["bias"].get<double>() == doctest::Approx(expected_bias).epsilon(0.1));

  // A good separator has a negative correction: the bias flips sign.
  const Model right_way(linear2(), {1.0, 0.0, 0.0});
  const double flipped = (1.0 - analytic_pi0()) * negative_correction(right_way, LossKind::mse, pools);
  REQUIRE(flipped < 0.0);
  const auto r2 = unbiasedness_experiment(right_way, pools, {200, 200}, cfg, opt);
  CHECK(r2.summary["z"].get<double>() < -4.0);
}

TEST_CASE("unbiasedness experiment: standard error shrinks like 1/sqrt(R)") {
  const auto pools = gaussian_pools(13);
  std::mt19937_64 rng(2);
  const auto m = oracle::random_model(linear2(), rng, 1.0);
  EstimatorConfig cfg;
  UnbiasednessOptions opt;
  opt.oracle_samples = 1000;
  opt.replicates = 100;
  const double se100 = unbiasedness_experiment(m, pools, {200, 200}, cfg, opt).summary["se_mean"].get<double>();
  opt.replicates = 400;
  const double se400 = unbiasedness_experiment(m, pools, {200, 200}, cfg, opt).summary["se_mean"].get<double>();
  CHECK(se100 / se400 >= 1.5);
  CHECK(se100 / se400 <= 2.5);
}

TEST_CASE("deviation study") {
  const auto pools = gaussian_pools(14);
  EstimatorConfig cfg;
  DeviationOptions opt;
  opt.negative_instance_targets = {400, 1600, 6400};
  opt.replicates = 60;
  opt.models = 20;
  const auto r = deviation_vs_m(linear2(), pools, cfg, opt);
  REQUIRE(r.rows.size() == 3);
  const double bound = (1.0 + 2.0 * cfg.pi0) * 1.0;
  for (const auto& row : r.rows) {
    CHECK(std::isfinite(row[2]));
    CHECK(row[4] <= bound);
  }
  CHECK(r.rows[2][2] < r.rows[0][2]);
  CHECK(r.summary["strictly_decreasing"].get<bool>());

  opt.negative_instance_targets = {800, 400};
  CHECK_THROWS_AS(deviation_vs_m(linear2(), pools, cfg, opt), ContractError);
}

TEST_CASE("pi0 grid parsing") {
  const auto g = parse_grid("0.5:0.9:0.05");
  REQUIRE(g.size() == 9);
  CHECK(g.front() == 0.5);
  CHECK(g[4] == 0.7);
  CHECK(g.back() == 0.9);
  CHECK(default_pi0_grid() == g);
  CHECK_THROWS_AS(parse_grid("0.5:0.9"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0.5:1.5:0.5"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0.9:0.5:0.1"), ConfigError);
}

TEST_CASE("pi0 sweep and loss study reports are complete and reproducible") {
  const auto pools = gaussian_pools(15, 2000);
  const auto [a, b] = split_pools(pools, 0.5, 1);
  const auto train_set = generate_bag_set(a, 100, 100, 1);
  const auto test_set = generate_bag_set(b, 100, 100, 2);
  TrainConfig base;
  base.model_spec.input_dim = 2;
  base.epochs = 5;
  base.optimizer.learning_rate = 1e-2;

  const auto sweep = pi0_sweep(train_set, test_set, default_pi0_grid(), base);
  CHECK(sweep.rows.size() == 9);
  CHECK(sweep.summary["measured_true_pi0"].get<double>() == doctest::Approx(true_pi0(train_set)));
  CHECK(sweep.summary.contains("over_vs_under"));
  const auto again = pi0_sweep(train_set, test_set, default_pi0_grid(), base);
  CHECK(sweep.to_json().dump() == again.to_json().dump());

  const auto study = loss_divergence_study(train_set, test_set, base);
  CHECK(study.rows.size() == 5);
  CHECK(study.columns.size() == study.rows[0].size());

  const fs::path dir = fs::temp_directory_path() / "milrisk_test_eval";
  fs::remove_all(dir);
  sweep.write(dir);
  const auto csv = slurp(dir / "pi0_sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
  CHECK(csv.rfind("pi0,", 0) == 0);
  CHECK(fs::exists(dir / "pi0_sweep.json"));
  fs::remove_all(dir);
}
