#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "oed/core.hpp"
#include "oed/design.hpp"

namespace testutil {

using oed::Matrix;
using oed::RowMatrix;
using oed::Vector;

inline RowMatrix gaussian_rows(int n, int p, oed::Rng& rng) {
  RowMatrix x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.next_gaussian();
  }
  return x;
}

inline oed::DesignPool gaussian_pool(int n, int p, oed::Rng& rng) {
  return oed::DesignPool(gaussian_rows(n, p, rng));
}

// Random symmetric positive definite matrix G^T G / p + jitter * I.
inline Matrix random_spd(int p, oed::Rng& rng, double jitter = 0.1) {
  Matrix g(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) g(i, j) = rng.next_gaussian();
  }
  return g.transpose() * g / p + jitter * Matrix::Identity(p, p);
}

// Random symmetric positive semidefinite matrix of given rank.
inline Matrix random_psd(int p, int rank, oed::Rng& rng) {
  Matrix g(p, rank);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < rank; ++j) g(i, j) = rng.next_gaussian();
  }
  return g * g.transpose() / p;
}

inline Vector random_simplex(int n, oed::Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = -std::log(1.0 - rng.next_double());
  }
  return v / v.sum();
}

struct KlSplit {
  Vector projected;
  double kl = std::numeric_limits<double>::infinity();
};

// Exhaustive oracle for the capped-simplex KL projection: try every split
// "q-1 largest coordinates capped, rest scaled proportionally" and keep the
// feasible one with the smallest KL divergence to omega.
inline KlSplit kl_projection_oracle(const Vector& omega, double cap) {
  const Eigen::Index n = omega.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return omega(a) > omega(b);
  });

  const auto kl_value = [&](const Vector& y) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y(i) > 0.0) {
        if (omega(i) <= 0.0) return std::numeric_limits<double>::infinity();
        kl += y(i) * std::log(y(i) / omega(i));
      }
    }
    return kl;
  };

  KlSplit best;
  for (Eigen::Index q = 1; q <= n; ++q) {
    // cap the q-1 largest, scale the remaining mass.
    double capped_mass = cap * static_cast<double>(q - 1);
    double z = 0.0;
    for (Eigen::Index r = q - 1; r < n; ++r) z += omega(order[static_cast<std::size_t>(r)]);
    Vector y(n);
    bool feasible = true;
    double c = 0.0;
    if (z > 0.0) {
      c = (1.0 - capped_mass) / z;
    } else if (std::abs(1.0 - capped_mass) > 1e-12) {
      feasible = false;
    }
    if (c < 0.0) feasible = false;
    for (Eigen::Index r = 0; r < n && feasible; ++r) {
      const Eigen::Index i = order[static_cast<std::size_t>(r)];
      y(i) = (r < q - 1) ? cap : c * omega(i);
      if (y(i) > cap * (1.0 + 1e-12)) feasible = false;
    }
    if (!feasible) continue;
    const double kl = kl_value(y);
    if (kl < best.kl) {
      best.kl = kl;
      best.projected = y;
    }
  }
  return best;
}

}  // namespace testutil
