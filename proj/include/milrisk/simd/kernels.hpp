#pragma once

// Dense inner-loop kernels used by the models and the optimizer.
//
// Every kernel has a portable scalar reference in kernels_scalar.cpp and, on
// x86-64, an AVX2 variant in kernels_avx2.cpp. The variant is chosen once at
// startup from CPUID; MILRISK_SIMD=scalar in the environment forces the
// reference path. Element-wise kernels (axpy, rmsprop) are bit-identical
// across variants. Reductions (dot, gemv) differ only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace milrisk::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[r] = bias[r] + sum_c w[r * cols + c] * x[c]
  void (*gemv_bias)(const double* w, const double* bias, const double* x, double* out,
                    std::size_t rows, std::size_t cols);
  // acc = decay * acc + (1 - decay) * g^2;  p -= lr * g / (sqrt(acc) + eps)
  void (*rmsprop)(double* params, double* acc, const double* grad, std::size_t n, double lr,
                  double decay, double eps);
};

std::string_view to_string(Isa isa);

bool isa_available(Isa isa);

// Table for a specific variant. Throws ConfigError when the CPU lacks it.
const KernelTable& kernels_for(Isa isa);

// Table selected at startup (or by a later set_active_isa call).
const KernelTable& kernels();
Isa active_isa();
void set_active_isa(Isa isa);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(MILRISK_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
}  // namespace detail

// Span front-ends over the active table. Lengths must agree; the caller checks.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace milrisk::simd
