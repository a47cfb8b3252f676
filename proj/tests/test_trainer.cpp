#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <set>

#include "milrisk/datagen.hpp"
#include "milrisk/errors.hpp"
#include "milrisk/trainer.hpp"

using namespace milrisk;

namespace {

struct Sets {
  BagDataset train, test;
};

Sets gaussian_sets(std::size_t bags_per_class, std::uint64_t seed) {
  const auto cfg = symmetric_gaussian_config(2, 2.0, 1.0, 5000, seed);
  const auto pools = make_gaussian_pools(cfg);
  const auto [a, b] = split_pools(pools, 0.5, seed + 1);
  return {generate_bag_set(a, bags_per_class, bags_per_class, seed + 2),
          generate_bag_set(b, bags_per_class, bags_per_class, seed + 3)};
}

BagDataset strip_labels(const BagDataset& d) {
  std::vector<Bag> bags;
  for (const auto& b : d.bags()) {
    Bag c;
    c.label = b.label;
    for (const auto& inst : b.instances) {
      c.instances.emplace_back(std::vector<double>(inst.features().begin(), inst.features().end()),
                               std::nullopt);
    }
    bags.push_back(std::move(c));
  }
  return BagDataset(std::move(bags));
}

TrainConfig config(Method m, std::size_t epochs, double lr = 1e-2) {
  TrainConfig c;
  c.method = m;
  c.epochs = epochs;
  c.optimizer.learning_rate = lr;
  c.model_spec.input_dim = 2;
  c.model_spec.seed = 5;
  c.estimator.pi0 = 0.7;
  c.seed = 3;
  return c;
}

bool same_params(const Model& a, const Model& b) {
  return a.param_count() == b.param_count() &&
         std::memcmp(a.params().data(), b.params().data(), a.param_count() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("make_batches: full batch, counts, partition, stratification") {
  const auto s = gaussian_sets(3000, 1);
  Rng rng(4);
  const auto full = make_batches(s.train, 0, rng, true);
  REQUIRE(full.size() == 1);
  CHECK(full[0].size() == 6000);

  const auto batches = make_batches(s.train, 100, rng, true);
  CHECK(batches.size() == 60);
  std::vector<int> seen(6000, 0);
  for (const auto& b : batches) {
    bool has_negative = false;
    for (auto i : b) {
      ++seen[i];
      has_negative = has_negative || s.train.bag(i).label == 0;
    }
    CHECK(has_negative);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("make_batches repairs batches that lack a negative bag") {
  const auto pools = make_gaussian_pools(symmetric_gaussian_config(2, 2.0, 1.0, 200, 2));
  const auto data = generate_bag_set(pools, 95, 5, 7);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto batches = make_batches(data, 20, rng, true);
    REQUIRE(batches.size() == 5);
    std::set<std::size_t> all;
    for (const auto& b : batches) {
      CHECK(std::any_of(b.begin(), b.end(), [&](auto i) { return data.bag(i).label == 0; }));
      all.insert(b.begin(), b.end());
    }
    CHECK(all.size() == 100);
  }
  Rng rng(1);
  CHECK_THROWS_AS(make_batches(data, 10, rng, true), ConfigError);
  CHECK_THROWS_AS(make_batches(data, 101, rng, true), ConfigError);
  const auto positives = generate_bag_set(pools, 10, 0, 7);
  CHECK_THROWS_AS(make_batches(positives, 5, rng, true), EstimatorUndefined);
  CHECK_NOTHROW(make_batches(positives, 5, rng, false));
}

TEST_CASE("history records every epoch and the checkpoint is the minimum") {
  const auto s = gaussian_sets(150, 2);
  const auto r = train(config(Method::imil, 25), s.train, s.test);
  REQUIRE(r.history.records.size() == 25);
  double best = 1e300;
  std::size_t best_epoch = 0;
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(r.history.records[i].epoch == i + 1);
    if (r.history.records[i].test_objective < best) {
      best = r.history.records[i].test_objective;
      best_epoch = i + 1;
    }
  }
  CHECK(r.best_epoch == best_epoch);
}

TEST_CASE("label-free learners never read instance labels while training") {
  const auto s = gaussian_sets(150, 3);
  for (auto m : {Method::imil, Method::bimil, Method::milr}) {
    auto c = config(m, 5);
    c.batch_bags = 50;
    const auto r = train(c, s.train, s.test);
    for (const auto& rec : r.history.records) CHECK(rec.objective_label_reads == 0);
    CHECK(r.history.records.back().test_instance_bayes.has_value());
  }
  const auto sup = train(config(Method::sup, 2), s.train, s.test);
  CHECK(sup.history.records.front().objective_label_reads > 0);

  // Label-free training data works for every label-free learner.
  const auto blind = strip_labels(s.train);
  for (auto m : {Method::imil, Method::bimil, Method::milr}) {
    const auto r = train(config(m, 3), blind, s.test);
    CHECK_FALSE(r.history.records.back().train_instance_bayes.has_value());
  }
  CHECK_THROWS_AS(train(config(Method::sup, 3), blind, s.test), ContractError);
}

TEST_CASE("training is deterministic") {
  const auto s = gaussian_sets(100, 4);
  auto c = config(Method::bimil, 15);
  c.batch_bags = 40;
  c.model_spec.hidden_dims = {6};
  const auto a = train(c, s.train, s.test);
  const auto b = train(c, s.train, s.test);
  CHECK(same_params(a.final_model, b.final_model));
  CHECK(same_params(a.best_model, b.best_model));
  for (std::size_t i = 0; i < a.history.records.size(); ++i) {
    CHECK(a.history.records[i].train_objective == b.history.records[i].train_objective);
    CHECK(a.history.records[i].test_ru == b.history.records[i].test_ru);
  }
}

TEST_CASE("bimil with C = 0 reproduces imil bit for bit") {
  const auto s = gaussian_sets(100, 5);
  auto imil = config(Method::imil, 20);
  imil.batch_bags = 30;
  imil.model_spec.hidden_dims = {5};
  auto bimil = imil;
  bimil.method = Method::bimil;
  bimil.estimator.penalty_weight = 0.0;
  // imil ignores the configured weight.
  imil.estimator.penalty_weight = 10.0;
  const auto a = train(imil, s.train, s.test);
  const auto b = train(bimil, s.train, s.test);
  CHECK(same_params(a.final_model, b.final_model));
  for (std::size_t i = 0; i < a.history.records.size(); ++i) {
    CHECK(a.history.records[i].train_objective == b.history.records[i].train_objective);
  }
}

TEST_CASE("full-batch objective descends (median over 10-epoch windows)") {
  const auto s = gaussian_sets(200, 6);
  for (auto m : {Method::sup, Method::imil, Method::bimil}) {
    CAPTURE(to_string(m));
    const auto r = train(config(m, 100, 5e-3), s.train, s.test);
    double prev = 1e300;
    for (std::size_t w = 0; w + 10 <= r.history.records.size(); w += 10) {
      std::vector<double> win;
      for (std::size_t i = w; i < w + 10; ++i) win.push_back(r.history.records[i].train_objective);
      std::nth_element(win.begin(), win.begin() + 5, win.end());
      CHECK(win[5] <= prev);
      prev = win[5];
    }
  }
}

TEST_CASE("sup and imil on separable gaussians") {
  const auto s = gaussian_sets(300, 7);
  const auto sup = train(config(Method::sup, 200), s.train, s.test);
  const auto imil = train(config(Method::imil, 200), s.train, s.test);
  const double sup_risk = *sup.history.records.back().test_instance_bayes;
  const double imil_risk = *imil.history.records.back().test_instance_bayes;
  CHECK(sup_risk <= 0.05);
  CHECK(std::abs(imil_risk - sup_risk) <= 0.02);
}

TEST_CASE("training preconditions and numeric abort") {
  const auto s = gaussian_sets(50, 8);
  const auto pools = make_gaussian_pools(symmetric_gaussian_config(2, 2.0, 1.0, 100, 1));
  const auto positives = generate_bag_set(pools, 20, 0, 1);
  CHECK_THROWS_AS(train(config(Method::imil, 2), positives, s.test), EstimatorUndefined);
  CHECK_THROWS_AS(train(config(Method::bimil, 2), positives, s.test), EstimatorUndefined);

  auto bad = config(Method::imil, 2);
  bad.epochs = 0;
  CHECK_THROWS_AS(train(bad, s.train, s.test), ConfigError);
  bad = config(Method::bimil, 2);
  bad.estimator.penalty_weight = -1.0;
  CHECK_THROWS_AS(train(bad, s.train, s.test), ConfigError);

  auto huge = config(Method::imil, 3, 1e300);
  huge.model_spec.hidden_dims = {8};
  CHECK_THROWS_AS(train(huge, s.train, s.test), NumericAbort);
}

TEST_CASE("method names") {
  CHECK(parse_method("bimil") == Method::bimil);
  CHECK(to_string(Method::milr) == "milr");
  CHECK_THROWS_AS(parse_method("dd"), ConfigError);
}
