// Compiled with -mavx2 -mfma -ffp-contract=off. Only reached after a CPUID
// check in dispatch.cpp.

#include <immintrin.h>

#include <cmath>

#include "milrisk/simd/kernels.hpp"

namespace milrisk::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(pair, pair);
  return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_bias_avx2(const double* w, const double* bias, const double* x, double* out,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = bias[r] + dot_avx2(w + r * cols, x, cols);
  }
}

void rmsprop_avx2(double* params, double* acc, const double* grad, std::size_t n, double lr,
                  double decay, double eps) {
  const double keep = 1.0 - decay;
  const __m256d vdecay = _mm256_set1_pd(decay);
  const __m256d vkeep = _mm256_set1_pd(keep);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d a = _mm256_add_pd(_mm256_mul_pd(vdecay, _mm256_loadu_pd(acc + i)),
                                    _mm256_mul_pd(vkeep, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(acc + i, a);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(vlr, g), _mm256_add_pd(_mm256_sqrt_pd(a), veps));
    _mm256_storeu_pd(params + i, _mm256_sub_pd(_mm256_loadu_pd(params + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    acc[i] = decay * acc[i] + keep * (g * g);
    params[i] -= lr * g / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{Isa::avx2, dot_avx2, axpy_avx2, gemv_bias_avx2, rmsprop_avx2};
}  // namespace detail

}  // namespace milrisk::simd
