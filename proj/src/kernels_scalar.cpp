#include "oed/kernels.hpp"

namespace oed::kernels::scalar {

void quad_forms(const double* X, std::size_t n, std::size_t p,
                const double* A, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X + i * p;
    double acc = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      const double* arow = A + r * p;
      double dot = 0.0;
      for (std::size_t c = 0; c < p; ++c) dot += arow[c] * x[c];
      acc += x[r] * dot;
    }
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
      for (std::size_t c = 0; c < p; ++c) srow[c] += wr * x[c];
    }
  }
}

}  // namespace oed::kernels::scalar
