// AVX2 kernel variants. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a runtime CPU check. Lane layout and the final
// (l0 + l2) + (l1 + l3) combine mirror the scalar reference exactly.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace ffc::kern::avx2 {

double l2sq(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (int l = 0; i < n; ++i, ++l) {
    const double d = a[i] - b[i];
    lane[l] = std::fma(d, d, lane[l]);
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double l1(const double* a, const double* b, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (int l = 0; i < n; ++i, ++l) lane[l] += std::fabs(a[i] - b[i]);
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (int l = 0; i < n; ++i, ++l) lane[l] += x[i];
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

void add(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void sq_dev(double* acc, const double* x, const double* mu, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(mu + i));
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - mu[i];
    acc[i] = std::fma(d, d, acc[i]);
  }
}

}  // namespace ffc::kern::avx2

#endif
