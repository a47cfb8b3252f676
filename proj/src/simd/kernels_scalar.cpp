#include <cmath>

#include "milrisk/simd/kernels.hpp"

namespace milrisk::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_bias_scalar(const double* w, const double* bias, const double* x, double* out,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = bias[r] + dot_scalar(w + r * cols, x, cols);
  }
}

void rmsprop_scalar(double* params, double* acc, const double* grad, std::size_t n, double lr,
                    double decay, double eps) {
  const double keep = 1.0 - decay;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    acc[i] = decay * acc[i] + keep * (g * g);
    params[i] -= lr * g / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::scalar, dot_scalar, axpy_scalar, gemv_bias_scalar,
                               rmsprop_scalar};
}  // namespace detail

}  // namespace milrisk::simd
