#include "milrisk/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "milrisk/errors.hpp"
#include "milrisk/simd/kernels.hpp"

namespace milrisk {
namespace {

double activate(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? z : 0.0;
  // softplus, overflow-safe
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double activate_grad(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Per-thread forward cache: pre-activations and activations of every hidden
// layer, packed back to back.
struct ForwardCache {
  std::vector<double> pre;
  std::vector<double> post;
  std::vector<std::size_t> offsets;
};

thread_local ForwardCache tls_cache;
thread_local std::vector<double> tls_delta;
thread_local std::vector<double> tls_delta_prev;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "softplus"; }

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::relu;
  if (text == "softplus") return Activation::softplus;
  throw ConfigError("unknown activation '" + std::string(text) + "' (expected relu|softplus)");
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("model input_dim must be >= 1");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("model hidden dimensions must be >= 1");
  }
}

std::vector<LayerLayout> make_layout(const ModelSpec& spec) {
  spec.validate();
  std::vector<LayerLayout> layout;
  std::size_t offset = 0;
  std::size_t in = spec.input_dim;
  auto push = [&](std::size_t out) {
    LayerLayout l{in, out, offset, offset + in * out};
    offset = l.bias_offset + out;
    layout.push_back(l);
    in = out;
  };
  for (std::size_t h : spec.hidden_dims) push(h);
  push(1);
  return layout;
}

std::size_t param_count(const ModelSpec& spec) {
  const auto layout = make_layout(spec);
  return layout.back().bias_offset + layout.back().out;
}

Model Model::init(const ModelSpec& spec) {
  auto layout = make_layout(spec);
  std::vector<double> params(layout.back().bias_offset + 1, 0.0);
  std::mt19937_64 rng(spec.seed);
  for (const auto& l : layout) {
    const double a = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (std::size_t i = 0; i < l.in * l.out; ++i) params[l.weight_offset + i] = dist(rng);
  }
  return Model(spec, std::move(params));
}

Model::Model(ModelSpec spec, std::vector<double> params)
    : spec_(std::move(spec)), layout_(make_layout(spec_)), params_(std::move(params)) {
  const std::size_t expected = layout_.back().bias_offset + layout_.back().out;
  if (params_.size() != expected) {
    throw ShapeError("parameter vector has " + std::to_string(params_.size()) +
                     " entries, layout needs " + std::to_string(expected));
  }
}

void Model::check_input(std::span<const double> x) const {
  if (x.size() != spec_.input_dim) {
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(spec_.input_dim));
  }
}

double Model::forward(std::span<const double> x) const {
  check_input(x);
  const auto& k = simd::kernels();
  if (layout_.size() == 1) {
    const auto& l = layout_[0];
    return params_[l.bias_offset] + k.dot(params_.data() + l.weight_offset, x.data(), l.in);
  }
  auto& cache = tls_cache;
  const double* input = x.data();
  std::size_t widest = 0;
  for (const auto& l : layout_) widest = std::max(widest, l.out);
  cache.pre.resize(2 * widest);
  double* cur = cache.pre.data();
  double* next = cache.pre.data() + widest;
  for (std::size_t li = 0; li + 1 < layout_.size(); ++li) {
    const auto& l = layout_[li];
    k.gemv_bias(params_.data() + l.weight_offset, params_.data() + l.bias_offset, input, cur,
                l.out, l.in);
    for (std::size_t j = 0; j < l.out; ++j) cur[j] = activate(spec_.activation, cur[j]);
    input = cur;
    std::swap(cur, next);
  }
  const auto& last = layout_.back();
  return params_[last.bias_offset] + k.dot(params_.data() + last.weight_offset, input, last.in);
}

double Model::accumulate_gradient(std::span<const double> x, double upstream,
                                  std::span<double> grad) const {
  check_input(x);
  if (grad.size() != params_.size()) {
    throw ShapeError("gradient buffer length does not match parameter count");
  }
  const auto& k = simd::kernels();
  const std::size_t hidden = layout_.size() - 1;

  auto& cache = tls_cache;
  cache.offsets.assign(hidden + 1, 0);
  for (std::size_t li = 0; li < hidden; ++li) {
    cache.offsets[li + 1] = cache.offsets[li] + layout_[li].out;
  }
  cache.pre.resize(cache.offsets[hidden]);
  cache.post.resize(cache.offsets[hidden]);

  auto layer_input = [&](std::size_t li) -> const double* {
    return li == 0 ? x.data() : cache.post.data() + cache.offsets[li - 1];
  };

  for (std::size_t li = 0; li < hidden; ++li) {
    const auto& l = layout_[li];
    double* z = cache.pre.data() + cache.offsets[li];
    double* a = cache.post.data() + cache.offsets[li];
    k.gemv_bias(params_.data() + l.weight_offset, params_.data() + l.bias_offset,
                layer_input(li), z, l.out, l.in);
    for (std::size_t j = 0; j < l.out; ++j) a[j] = activate(spec_.activation, z[j]);
  }
  const auto& last = layout_.back();
  const double score =
      params_[last.bias_offset] + k.dot(params_.data() + last.weight_offset, layer_input(hidden),
                                        last.in);
  if (upstream == 0.0) return score;

  auto& delta = tls_delta;
  auto& delta_prev = tls_delta_prev;
  delta.assign(1, upstream);
  for (std::size_t li = layout_.size(); li-- > 0;) {
    const auto& l = layout_[li];
    const double* input = layer_input(li);
    for (std::size_t r = 0; r < l.out; ++r) {
      if (delta[r] == 0.0) continue;
      grad[l.bias_offset + r] += delta[r];
      k.axpy(delta[r], input, grad.data() + l.weight_offset + r * l.in, l.in);
    }
    if (li == 0) break;
    delta_prev.assign(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      if (delta[r] == 0.0) continue;
      k.axpy(delta[r], params_.data() + l.weight_offset + r * l.in, delta_prev.data(), l.in);
    }
    const double* z = cache.pre.data() + cache.offsets[li - 1];
    for (std::size_t j = 0; j < l.in; ++j) delta_prev[j] *= activate_grad(spec_.activation, z[j]);
    std::swap(delta, delta_prev);
  }
  return score;
}

std::vector<double> Model::backward(std::span<const double> x, double upstream) const {
  std::vector<double> grad(params_.size(), 0.0);
  accumulate_gradient(x, upstream, grad);
  return grad;
}

double Model::min_abs_preactivation(std::span<const double> x) const {
  check_input(x);
  double smallest = std::numeric_limits<double>::infinity();
  std::vector<double> input(x.begin(), x.end());
  std::vector<double> z;
  for (std::size_t li = 0; li + 1 < layout_.size(); ++li) {
    const auto& l = layout_[li];
    z.assign(l.out, 0.0);
    simd::kernels_for(simd::Isa::scalar)
        .gemv_bias(params_.data() + l.weight_offset, params_.data() + l.bias_offset,
                   input.data(), z.data(), l.out, l.in);
    for (double& v : z) {
      smallest = std::min(smallest, std::abs(v));
      v = activate(spec_.activation, v);
    }
    input = z;
  }
  return smallest;
}

void rmsprop_step(OptimizerState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.accumulators.size()) {
    throw ShapeError("rmsprop_step: params, grads and accumulators differ in length");
  }
  simd::kernels().rmsprop(params.data(), state.accumulators.data(), grads.data(), params.size(),
                          state.config.learning_rate, state.config.decay, state.config.epsilon);
}

void save_params(const std::filesystem::path& path, std::span<const double> params) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    const std::uint64_t n = to_le(params.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (double p : params) {
      const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(p));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<double> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::uint64_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) {
    throw FormatError("'" + path.string() + "': missing length prefix");
  }
  n = to_le(n);
  const auto size = std::filesystem::file_size(path);
  if (size != sizeof n + n * sizeof(double)) {
    throw FormatError("'" + path.string() + "': length prefix " + std::to_string(n) +
                      " does not match file size");
  }
  std::vector<double> params(n);
  for (auto& p : params) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    p = std::bit_cast<double>(to_le(bits));
  }
  if (!in) throw FormatError("'" + path.string() + "': truncated");
  return params;
}

}  // namespace milrisk
