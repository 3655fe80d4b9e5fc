#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops shared by the solver and the swap rounding
// search.  Scalar reference kernels always exist; on x86-64 an AVX2+FMA
// variant is selected at startup (override with OED_KERNELS=scalar).
namespace oed::kernels {

// out[i] = x_i^T A x_i for every row x_i of the row-major n-by-p matrix X.
// A is a dense symmetric p-by-p matrix in row-major (== column-major) order.
using QuadFormsFn = void (*)(const double* X, std::size_t n, std::size_t p,
                             const double* A, double* out);

// S += sum_i w[i] * x_i x_i^T, S dense p-by-p row-major (caller zeroes S).
using WeightedGramFn = void (*)(const double* X, std::size_t n, std::size_t p,
                                const double* w, double* S);

namespace scalar {
void quad_forms(const double* X, std::size_t n, std::size_t p,
                const double* A, double* out);
void weighted_gram(const double* X, std::size_t n, std::size_t p,
                   const double* w, double* S);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void quad_forms(const double* X, std::size_t n, std::size_t p,
                const double* A, double* out);
void weighted_gram(const double* X, std::size_t n, std::size_t p,
                   const double* w, double* S);
}  // namespace avx2
#endif

// Active (dispatched) entry points.
extern QuadFormsFn quad_forms;
extern WeightedGramFn weighted_gram;

// Name of the variant selected at startup: "scalar" or "avx2".
const std::string& active_variant();

}  // namespace oed::kernels
