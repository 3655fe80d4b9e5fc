#include "oed/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace oed::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double dot(const double* a, const double* b, std::size_t p) {
  std::size_t c = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; c + 4 <= p; c += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + c), _mm256_loadu_pd(b + c), acc);
  }
  double s = hsum(acc);
  for (; c < p; ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

void quad_forms(const double* X, std::size_t n, std::size_t p,
                const double* A, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X + i * p;
    double acc = 0.0;
    for (std::size_t r = 0; r < p; ++r) acc += x[r] * dot(A + r * p, x, p);
    out[i] = acc;
  }
}

void weighted_gram(const double* X, std::size_t n, std::size_t p,
                   const double* w, double* S) {
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const double* x = X + i * p;
    for (std::size_t r = 0; r < p; ++r) {
      const double wr = w[i] * x[r];
      double* srow = S + r * p;
      const __m256d vw = _mm256_set1_pd(wr);
      std::size_t c = 0;
      for (; c + 4 <= p; c += 4) {
        __m256d s = _mm256_loadu_pd(srow + c);
        s = _mm256_fmadd_pd(vw, _mm256_loadu_pd(x + c), s);
        _mm256_storeu_pd(srow + c, s);
      }
      for (; c < p; ++c) srow[c] += wr * x[c];
    }
  }
}

}  // namespace oed::kernels::avx2

#endif
