#include <doctest.h>

#include <cmath>

#include "milrisk/errors.hpp"
#include "milrisk/losses.hpp"
#include "oracle.hpp"

using namespace milrisk;

TEST_CASE("loss values at the symmetry point") {
  CHECK(loss_value(LossKind::mse, 0.0, 1) == doctest::Approx(0.25));
  CHECK(loss_value(LossKind::ce, 0.0, 1) == doctest::Approx(std::log(2.0)));
  CHECK(loss_value(LossKind::ce, 0.0, 1) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(loss_value(LossKind::zero_one, 2.0, 0) == 1.0);
  CHECK(loss_value(LossKind::zero_one, -2.0, 0) == 0.0);
  CHECK(loss_value(LossKind::zero_one, 0.0, 0) == 0.0);
  CHECK(loss_value(LossKind::zero_one, 0.0, 1) == 1.0);
}

TEST_CASE("loss values match the naive forms") {
  for (double s = -8.0; s <= 8.0; s += 0.25) {
    for (int y : {0, 1}) {
      CHECK(loss_value(LossKind::mse, s, y) == doctest::Approx(oracle::mse(s, y)).epsilon(1e-12));
      CHECK(loss_value(LossKind::ce, s, y) == doctest::Approx(oracle::ce(s, y)).epsilon(1e-10));
    }
  }
}

TEST_CASE("ce stays finite at large scores") {
  CHECK(loss_value(LossKind::ce, 800.0, 0) == doctest::Approx(800.0));
  CHECK(loss_value(LossKind::ce, -800.0, 1) == doctest::Approx(800.0));
  CHECK(loss_value(LossKind::ce, 800.0, 1) == 0.0);
  CHECK(std::isfinite(loss_value(LossKind::mse, -800.0, 1)));
}

TEST_CASE("loss gradients") {
  CHECK(loss_grad(LossKind::mse, 0.0, 1) == doctest::Approx(2 * -0.5 * 0.25));
  CHECK(loss_grad(LossKind::mse, 0.0, 1) == doctest::Approx(-0.25));
  CHECK(loss_grad(LossKind::ce, 0.0, 1) == doctest::Approx(-0.5));
  CHECK(std::abs(loss_grad(LossKind::ce, 60.0, 1)) < 1e-20);
  CHECK_THROWS_AS(loss_grad(LossKind::zero_one, 0.5, 1), UnsupportedGradient);
}

TEST_CASE("loss gradients match finite differences over [-10, 10]") {
  const double h = 1e-5;
  for (auto k : {LossKind::mse, LossKind::ce}) {
    for (int y : {0, 1}) {
      for (double s = -10.0; s <= 10.0 + 1e-9; s += 0.05) {
        const double numeric = (oracle::loss(k, s + h, y) - oracle::loss(k, s - h, y)) / (2 * h);
        const double analytic = loss_grad(k, s, y);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        CAPTURE(s);
        CHECK(std::abs(analytic - numeric) / denom <= 1e-6);
      }
    }
  }
}

TEST_CASE("range, symmetry and monotonicity") {
  double prev_mse = 2.0, prev_ce = 1e300;
  for (double s = -30.0; s <= 30.0; s += 0.1) {
    for (int y : {0, 1}) {
      const double m = loss_value(LossKind::mse, s, y);
      CHECK(m >= 0.0);
      CHECK(m <= 1.0);
      CHECK(loss_value(LossKind::ce, s, y) >= 0.0);
    }
    CHECK(loss_value(LossKind::mse, s, 1) == loss_value(LossKind::mse, -s, 0));
    const double m1 = loss_value(LossKind::mse, s, 1);
    const double c1 = loss_value(LossKind::ce, s, 1);
    if (s < 15.0) {
      CHECK(m1 < prev_mse);
      CHECK(c1 < prev_ce);
    }
    prev_mse = m1;
    prev_ce = c1;
  }
}

TEST_CASE("bounds and consistency report") {
  CHECK(loss_bound(LossKind::mse) == 1.0);
  CHECK(loss_bound(LossKind::zero_one) == 1.0);
  CHECK_FALSE(loss_bound(LossKind::ce).has_value());

  // d/dx (1/2 - x)^2 = -2 (1/2 - x) -> -1 at 0; d/dx log(1 + e^-x) = -1/(1 + e^x) -> -1/2.
  const auto mse = bayes_consistency_report(LossKind::mse);
  CHECK(mse.phi_prime_at_zero == doctest::Approx(-2.0 * 0.5).epsilon(1e-8));
  CHECK(mse.is_consistent);
  CHECK(mse.bound == 1.0);
  const auto ce = bayes_consistency_report(LossKind::ce);
  CHECK(ce.phi_prime_at_zero == doctest::Approx(-1.0 / (1.0 + std::exp(0.0))).epsilon(1e-8));
  CHECK(ce.is_consistent);
  CHECK_FALSE(ce.bound.has_value());
  CHECK_THROWS_AS(bayes_consistency_report(LossKind::zero_one), ContractError);
}

TEST_CASE("parse and print") {
  CHECK(parse_loss("mse") == LossKind::mse);
  CHECK(parse_loss("ce") == LossKind::ce);
  CHECK(to_string(LossKind::zero_one) == "zero_one");
  CHECK_THROWS_AS(parse_loss("hinge"), ConfigError);
}
