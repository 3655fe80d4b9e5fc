#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oed/core.hpp"

namespace oed {

/// Candidate design points: n rows of dimension p, plus covariance helpers.
class DesignPool {
 public:
  explicit DesignPool(RowMatrix points);

  Eigen::Index n() const { return X_.rows(); }
  Eigen::Index p() const { return X_.cols(); }
  const RowMatrix& points() const { return X_; }
  Vector row(Eigen::Index i) const { return X_.row(i).transpose(); }

  // sum_i w[i] * x_i x_i^T via the dispatched kernel.
  Matrix weighted_covariance(const Vector& w) const;
  // x_i^T A x_i for every row.
  Vector quad_forms(const Matrix& a) const;

 private:
  RowMatrix X_;
};

DesignPool load_pool_csv(const std::string& path);
void save_pool_csv(const DesignPool& pool, const std::string& path);

/// sigma_lo * I <= (1/n) sum x_i x_i^T <= sigma_hi * I, max_norm = max ||x_i||.
struct PoolStats {
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
  double max_norm = 0.0;
  int dim = 0;  // point dimension p
};

PoolStats compute_pool_stats(const DesignPool& pool);

/// Fractional selection pi with 0 <= pi_i <= b and sum pi_i <= k.
struct FractionalDesign {
  Vector weights;
  int k = 0;
  int b = 1;

  void validate() const;
  double total() const { return weights.sum(); }
};

/// Integral selection s with s_i in {0,...,b} and sum s_i <= k.
struct IntegralDesign {
  std::vector<int> counts;
  int k = 0;
  int b = 1;

  void validate() const;
  int total() const;
  Vector counts_vector() const;
};

/// Seeded deterministic generator: xoshiro256++ seeded via splitmix64, with
/// hand-rolled distributions so sequences are identical across platforms and
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, bound) by rejection; bound > 0.
  std::uint64_t next_below(std::uint64_t bound);
  // Uniform on [0, 1).
  double next_double();
  // Standard normal via Box-Muller.
  double next_gaussian();

 private:
  std::uint64_t state_[4];
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace oed
