#include <immintrin.h>

#include "sem/kernels.hpp"

namespace sem::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  const double* xs = x.data();
  const double* val = a.val.data();
  const std::int32_t* col = a.col.data();
  for (std::size_t r = 0; r < a.rows; ++r) {
    std::size_t e = a.row_ptr[r];
    const std::size_t end = a.row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; e + 4 <= end; e += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + e));
      const __m256d xv = _mm256_i32gather_pd(xs, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + e), xv, acc);
    }
    double tail = 0.0;
    for (; e < end; ++e) tail += val[e] * xs[col[e]];
    y[r] = hsum(acc) + tail;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y.data() + i);
    _mm256_storeu_pd(y.data() + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x.data() + i), yv));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x.data() + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x.data() + i + 4));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i];
  return hsum(_mm256_add_pd(a0, a1)) + tail;
}

}  // namespace sem::kernels::avx2
