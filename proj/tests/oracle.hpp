#pragma once

// Naive reference implementations used to check the library. Written from the
// formulas directly: plain loops, no shared helpers with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "milrisk/data.hpp"
#include "milrisk/datagen.hpp"
#include "milrisk/model.hpp"

namespace oracle {

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

inline double mse(double s, int y) {
  const double d = sigmoid(s) - y;
  return d * d;
}

inline double ce(double s, int y) {
  const double w = sigmoid(s);
  return y == 1 ? -std::log(w) : -std::log(1.0 - w);
}

inline double loss(milrisk::LossKind k, double s, int y) {
  switch (k) {
    case milrisk::LossKind::mse: return mse(s, y);
    case milrisk::LossKind::ce: return ce(s, y);
    default: return (s > 0.0 ? 1 : 0) != y ? 1.0 : 0.0;
  }
}

// W (out x in, row-major) then b, per layer; hidden layers activated.
inline double forward(const milrisk::ModelSpec& spec, const std::vector<double>& p,
                      const std::vector<double>& x) {
  std::vector<std::size_t> dims{spec.input_dim};
  for (auto h : spec.hidden_dims) dims.push_back(h);
  dims.push_back(1);
  std::vector<double> a = x;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    std::vector<double> z(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) z[r] += p[off + r * in + c] * a[c];
    }
    off += in * out;
    for (std::size_t r = 0; r < out; ++r) z[r] += p[off + r];
    off += out;
    if (l + 2 < dims.size()) {
      for (auto& v : z) {
        v = spec.activation == milrisk::Activation::relu ? std::max(0.0, v)
                                                         : std::log1p(std::exp(v));
      }
    }
    a = z;
  }
  return a[0];
}

struct ToyBag {
  int label = 0;
  std::vector<double> scores;
};

inline double unbiased(const std::vector<ToyBag>& bags, double pi0, milrisk::LossKind k) {
  double all = 0.0, neg = 0.0;
  std::size_t n_all = 0, n_neg = 0;
  for (const auto& b : bags) {
    for (double s : b.scores) {
      all += loss(k, s, 1);
      ++n_all;
      if (b.label == 0) {
        neg += loss(k, s, 0) - loss(k, s, 1);
        ++n_neg;
      }
    }
  }
  return all / n_all + pi0 * neg / n_neg;
}

inline double margin(const ToyBag& b, milrisk::LossKind k) {
  double m = -1e300;
  for (double s : b.scores) m = std::max(m, loss(k, s, 0) - loss(k, s, 1));
  return m;
}

inline double penalty(const std::vector<ToyBag>& bags, milrisk::LossKind k) {
  double total = 0.0;
  for (const auto& b : bags) {
    const double m = margin(b, k);
    total += b.label == 0 ? std::max(0.0, m) : std::max(0.0, -m);
  }
  return total;
}

inline double softmax_alpha(const std::vector<double>& v, double alpha) {
  double num = 0.0, den = 0.0;
  for (double x : v) {
    num += x * std::exp(alpha * x);
    den += std::exp(alpha * x);
  }
  return num / den;
}

inline double milr(const std::vector<ToyBag>& bags, double alpha) {
  double total = 0.0;
  for (const auto& b : bags) {
    std::vector<double> w;
    for (double s : b.scores) w.push_back(sigmoid(s));
    double p = std::clamp(softmax_alpha(w, alpha), 1e-12, 1.0 - 1e-12);
    total += b.label == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / bags.size();
}

// Score of every instance under the model, bag by bag.
inline std::vector<ToyBag> score_bags(const milrisk::Model& model,
                                      const milrisk::BagDataset& data) {
  std::vector<ToyBag> out;
  const std::vector<double> p(model.params().begin(), model.params().end());
  for (const auto& b : data.bags()) {
    ToyBag t;
    t.label = b.label;
    for (const auto& inst : b.instances) {
      t.scores.push_back(forward(model.spec(), p,
                                 std::vector<double>(inst.features().begin(),
                                                     inst.features().end())));
    }
    out.push_back(t);
  }
  return out;
}

// Bags with one-dimensional features equal to the requested scores under the
// identity linear model w = 1, b = 0.
inline milrisk::BagDataset bags_with_scores(const std::vector<ToyBag>& bags) {
  std::vector<milrisk::Bag> out;
  for (const auto& t : bags) {
    milrisk::Bag b;
    b.label = t.label;
    for (double s : t.scores) b.instances.emplace_back(std::vector<double>{s}, std::nullopt);
    out.push_back(std::move(b));
  }
  return milrisk::BagDataset(std::move(out));
}

inline milrisk::Model identity_model() {
  milrisk::ModelSpec spec;
  spec.input_dim = 1;
  return milrisk::Model(spec, {1.0, 0.0});
}

inline double logit(double w) { return std::log(w / (1.0 - w)); }

inline milrisk::Model random_model(const milrisk::ModelSpec& spec, std::mt19937_64& rng,
                                   double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> p(milrisk::param_count(spec));
  for (auto& v : p) v = u(rng);
  return milrisk::Model(spec, p);
}

}  // namespace oracle
