#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace milrisk {

enum class Activation { relu, softplus };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

// Architecture of a scoring network f: R^d -> R. Empty hidden_dims gives a
// linear model. Hidden layers use `activation`; the output layer is affine and
// returns the raw (pre-sigmoid) score.
struct ModelSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  // Throws ConfigError on a zero dimension.
  void validate() const;
};

// Offsets into the flat parameter vector. Each layer stores its weight matrix
// row-major (out x in) followed by its bias vector.
struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerLayout> make_layout(const ModelSpec& spec);
std::size_t param_count(const ModelSpec& spec);

class Model {
 public:
  // Glorot-uniform weights, a = sqrt(6 / (fan_in + fan_out)); zero biases.
  static Model init(const ModelSpec& spec);

  // Wraps existing parameters. Throws ShapeError when the length is wrong.
  Model(ModelSpec spec, std::vector<double> params);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerLayout>& layout() const { return layout_; }
  std::size_t input_dim() const { return spec_.input_dim; }
  std::size_t param_count() const { return params_.size(); }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }

  double forward(std::span<const double> x) const;

  // d(upstream * f(x)) / d(params), same layout as params().
  std::vector<double> backward(std::span<const double> x, double upstream) const;

  // grad += d(upstream * f(x)) / d(params). Returns f(x).
  double accumulate_gradient(std::span<const double> x, double upstream,
                             std::span<double> grad) const;

  // Smallest |pre-activation| over hidden units for input x; +inf for linear
  // models. Used to keep finite-difference probes away from relu kinks.
  double min_abs_preactivation(std::span<const double> x) const;

 private:
  void check_input(std::span<const double> x) const;

  ModelSpec spec_;
  std::vector<LayerLayout> layout_;
  std::vector<double> params_;
};

// RMSprop with per-parameter squared-gradient accumulators.
struct RmsPropConfig {
  double learning_rate = 1e-4;
  double decay = 0.9;
  double epsilon = 1e-8;
};

struct OptimizerState {
  RmsPropConfig config;
  std::vector<double> accumulators;

  OptimizerState() = default;
  OptimizerState(RmsPropConfig c, std::size_t n) : config(c), accumulators(n, 0.0) {}
};

// acc <- decay*acc + (1-decay)*g^2; p <- p - lr*g/(sqrt(acc)+eps).
void rmsprop_step(OptimizerState& state, std::span<double> params, std::span<const double> grads);

// Checkpoints: u64 little-endian length, then little-endian IEEE-754 doubles.
void save_params(const std::filesystem::path& path, std::span<const double> params);
std::vector<double> load_params(const std::filesystem::path& path);

}  // namespace milrisk
