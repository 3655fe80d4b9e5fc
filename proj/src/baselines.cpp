#include "oed/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval_counts(const DesignPool& pool, const Criterion& c,
                   const std::vector<int>& counts) {
  Vector w(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = counts[i];
  }
  return eval(c, pool.weighted_covariance(w), &pool);
}

// "Better" under the baseline comparison rules: infinities are equal to each
// other and worse than any finite value; finite values compare numerically.
bool strictly_better(double a, double b) {
  if (std::isinf(a)) return false;
  if (std::isinf(b)) return true;
  return a < b;
}

std::vector<int> sample_uniform_subset(int n, int k, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.next_below(
                           static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(j)]);
  }
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < k; ++i) counts[static_cast<std::size_t>(idx[i])] = 1;
  return counts;
}

int matrix_rank(const Matrix& m) {
  const EigenDecomp e = sym_eig(m);
  const double lmax = std::max(0.0, e.eigenvalues(e.dim() - 1));
  const double tol = 1e-10 * std::max(1.0, lmax);
  int r = 0;
  for (Eigen::Index j = 0; j < e.dim(); ++j) {
    if (e.eigenvalues(j) > tol) ++r;
  }
  return r;
}

// Rank-1 inverse maintenance for the exchange search.  Supports the
// trace-of-inverse, log-determinant, and averaged-prediction-variance
// objectives; evaluating a candidate swap is O(p^2).
class InverseTracker {
 public:
  InverseTracker(const DesignPool& pool, const Criterion& c)
      : pool_(pool), c_(c), shift_(c.bayes_shift()) {
    if (c_.kind == CriterionKind::V) {
      m_ = pool_.points().transpose() * pool_.points() /
           static_cast<double>(pool_.n());
    }
  }

  static bool supports(const Criterion& c) {
    return c.kind == CriterionKind::A || c.kind == CriterionKind::D ||
           c.kind == CriterionKind::V;
  }

  void reset(const std::vector<int>& counts) {
    Vector w(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      w(static_cast<Eigen::Index>(i)) = counts[i];
    }
    Matrix sigma = pool_.weighted_covariance(w);
    if (shift_ > 0.0) {
      sigma += shift_ * Matrix::Identity(sigma.rows(), sigma.cols());
    }
    const EigenDecomp e = sym_eig(sigma);
    const double lmax = e.eigenvalues(e.dim() - 1);
    singular_ = e.eigenvalues(0) <= 1e-12 * std::max(1.0, lmax);
    if (!singular_) {
      inv_ = e.eigenvectors * e.eigenvalues.cwiseInverse().asDiagonal() *
             e.eigenvectors.transpose();
      logdet_ = e.eigenvalues.array().log().sum();
    }
  }

  bool singular() const { return singular_; }

  // Objective after replacing point i by point j, without committing.
  double swap_objective(int i, int j) const {
    if (singular_) return kInf;
    const Vector xj = pool_.row(j);
    const Vector inv_xj = inv_ * xj;
    const double dj = 1.0 + xj.dot(inv_xj);
    const Matrix inv1 = inv_ - inv_xj * inv_xj.transpose() / dj;
    const Vector xi = pool_.row(i);
    const Vector inv1_xi = inv1 * xi;
    const double di = 1.0 - xi.dot(inv1_xi);
    if (di <= 1e-12) return kInf;
    const double p = static_cast<double>(pool_.p());
    switch (c_.kind) {
      case CriterionKind::A: {
        const double tr =
            inv1.trace() + inv1_xi.squaredNorm() / di;
        return tr / p;
      }
      case CriterionKind::D: {
        const double ld = logdet_ + std::log(dj) + std::log(di);
        return std::exp(-ld / p);
      }
      case CriterionKind::V: {
        const Matrix inv2 = inv1 + inv1_xi * inv1_xi.transpose() / di;
        return m_.cwiseProduct(inv2).sum();
      }
      default:
        break;
    }
    return kInf;
  }

  void commit(int i, int j) {
    const Vector xj = pool_.row(j);
    const Vector inv_xj = inv_ * xj;
    const double dj = 1.0 + xj.dot(inv_xj);
    inv_ -= inv_xj * inv_xj.transpose() / dj;
    logdet_ += std::log(dj);
    const Vector xi = pool_.row(i);
    const Vector inv_xi = inv_ * xi;
    const double di = 1.0 - xi.dot(inv_xi);
    if (di <= 1e-12) {
      singular_ = true;
      return;
    }
    inv_ += inv_xi * inv_xi.transpose() / di;
    logdet_ += std::log(di);
  }

 private:
  const DesignPool& pool_;
  Criterion c_;
  double shift_ = 0.0;
  Matrix inv_;
  Matrix m_;
  double logdet_ = 0.0;
  bool singular_ = true;
};

}  // namespace

IntegralDesign uniform_select(const DesignPool& pool, const Criterion& c,
                              int k, int repeats, Rng& rng) {
  const int n = static_cast<int>(pool.n());
  if (k > n) throw input_error("uniform_select: k > n");
  if (repeats < 1) throw input_error("uniform_select: repeats must be >= 1");
  std::vector<int> best;
  double best_obj = kInf;
  for (int r = 0; r < repeats; ++r) {
    std::vector<int> counts = sample_uniform_subset(n, k, rng);
    const double obj = eval_counts(pool, c, counts);
    if (best.empty() || strictly_better(obj, best_obj)) {
      best = std::move(counts);
      best_obj = obj;
    }
  }
  IntegralDesign out{std::move(best), k, 1};
  out.validate();
  return out;
}

WeightedSelectResult weighted_select(const DesignPool& pool,
                                     const Criterion& c,
                                     const FractionalDesign& pi_star, int k,
                                     int repeats, Rng& rng) {
  const int n = static_cast<int>(pool.n());
  if (k > n) throw input_error("weighted_select: k > n");
  if (pi_star.weights.size() != pool.n()) {
    throw input_error("weighted_select: pool / design size mismatch");
  }
  if (std::abs(pi_star.total() - k) > 1e-6) {
    throw input_error("weighted_select: weights must sum to k");
  }

  WeightedSelectResult res;
  std::vector<int> best;
  double best_obj = kInf;
  for (int r = 0; r < repeats; ++r) {
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    Vector rem = pi_star.weights;
    for (int d = 0; d < k; ++d) {
      const double total = rem.sum();
      int pick = -1;
      if (total > 1e-12) {
        const double u = rng.next_double() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += rem(i);
          if (u < acc) {
            pick = i;
            break;
          }
        }
        if (pick < 0) {  // guard against roundoff at the right edge
          for (int i = n - 1; i >= 0; --i) {
            if (rem(i) > 0.0) {
              pick = i;
              break;
            }
          }
        }
      } else {
        // Support exhausted: draw uniformly among unselected points.
        res.uniform_fallback = true;
        int free_count = 0;
        for (int i = 0; i < n; ++i) {
          if (counts[static_cast<std::size_t>(i)] == 0) ++free_count;
        }
        auto target = rng.next_below(static_cast<std::uint64_t>(free_count));
        for (int i = 0; i < n; ++i) {
          if (counts[static_cast<std::size_t>(i)] == 0 && target-- == 0) {
            pick = i;
            break;
          }
        }
      }
      counts[static_cast<std::size_t>(pick)] = 1;
      rem(pick) = 0.0;
    }
    const double obj = eval_counts(pool, c, counts);
    if (best.empty() || strictly_better(obj, best_obj)) {
      best = std::move(counts);
      best_obj = obj;
    }
  }
  res.design = IntegralDesign{std::move(best), k, 1};
  res.design.validate();
  return res;
}

IntegralDesign fedorov_exchange(const DesignPool& pool, const Criterion& c,
                                int k, int max_changes, Rng& rng,
                                bool fast_updates) {
  const int n = static_cast<int>(pool.n());
  if (k > n) throw input_error("fedorov_exchange: k > n");
  std::vector<int> counts = sample_uniform_subset(n, k, rng);
  double cur = eval_counts(pool, c, counts);

  const bool use_tracker = fast_updates && InverseTracker::supports(c);
  InverseTracker tracker(pool, c);

  for (int change = 0; change < max_changes; ++change) {
    const bool cur_inf = std::isinf(cur);
    int cur_rank = 0;
    if (cur_inf) {
      Vector w(n);
      for (int i = 0; i < n; ++i) w(i) = counts[static_cast<std::size_t>(i)];
      cur_rank = matrix_rank(pool.weighted_covariance(w));
    }
    if (use_tracker) tracker.reset(counts);

    int best_i = -1, best_j = -1, best_rank = cur_rank;
    double best_obj = cur;
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      if (counts[static_cast<std::size_t>(i)] != 1) continue;
      for (int j = 0; j < n; ++j) {
        if (counts[static_cast<std::size_t>(j)] != 0) continue;
        double obj;
        int rank = 0;
        if (use_tracker && !tracker.singular()) {
          obj = tracker.swap_objective(i, j);
        } else {
          counts[static_cast<std::size_t>(i)] = 0;
          counts[static_cast<std::size_t>(j)] = 1;
          obj = eval_counts(pool, c, counts);
          if (cur_inf && std::isinf(obj)) {
            Vector w(n);
            for (int q = 0; q < n; ++q) {
              w(q) = counts[static_cast<std::size_t>(q)];
            }
            rank = matrix_rank(pool.weighted_covariance(w));
          }
          counts[static_cast<std::size_t>(i)] = 1;
          counts[static_cast<std::size_t>(j)] = 0;
        }
        bool take = false;
        if (strictly_better(obj, best_obj)) {
          take = true;
        } else if (cur_inf && std::isinf(best_obj) && std::isinf(obj) &&
                   rank > best_rank) {
          // Keep an infinite-to-infinite swap only when it raises the
          // covariance rank.
          take = true;
        }
        if (take) {
          best_obj = obj;
          best_i = i;
          best_j = j;
          best_rank = rank;
          improved = true;
        }
      }
    }
    if (!improved) break;
    counts[static_cast<std::size_t>(best_i)] = 0;
    counts[static_cast<std::size_t>(best_j)] = 1;
    cur = use_tracker ? eval_counts(pool, c, counts) : best_obj;
  }

  IntegralDesign out{std::move(counts), k, 1};
  out.validate();
  return out;
}

IntegralDesign greedy_removal(const DesignPool& pool, const Criterion& c,
                              int k) {
  const int n = static_cast<int>(pool.n());
  if (k > n) throw input_error("greedy_removal: k > n");
  std::vector<int> counts(static_cast<std::size_t>(n), 1);
  for (int removed = 0; removed < n - k; ++removed) {
    int best_i = -1;
    double best_obj = kInf;
    for (int i = 0; i < n; ++i) {
      if (counts[static_cast<std::size_t>(i)] != 1) continue;
      counts[static_cast<std::size_t>(i)] = 0;
      const double obj = eval_counts(pool, c, counts);
      counts[static_cast<std::size_t>(i)] = 1;
      if (best_i < 0 || strictly_better(obj, best_obj)) {
        best_i = i;
        best_obj = obj;
      }
    }
    counts[static_cast<std::size_t>(best_i)] = 0;
  }
  IntegralDesign out{std::move(counts), k, 1};
  out.validate();
  return out;
}

namespace {

double count_states(int n, int k, int b) {
  // Number of integer vectors with entries in [0,b] summing to k; capped so
  // the caller can refuse oversized enumerations.
  std::vector<double> dp(static_cast<std::size_t>(k) + 1, 0.0);
  dp[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(dp.size(), 0.0);
    for (int s = 0; s <= k; ++s) {
      if (dp[static_cast<std::size_t>(s)] == 0.0) continue;
      for (int t = 0; t <= b && s + t <= k; ++t) {
        next[static_cast<std::size_t>(s + t)] +=
            dp[static_cast<std::size_t>(s)];
        if (next[static_cast<std::size_t>(s + t)] > 2e6) {
          next[static_cast<std::size_t>(s + t)] = 2e6;  // saturate
        }
      }
    }
    dp = std::move(next);
  }
  return dp[static_cast<std::size_t>(k)];
}

}  // namespace

IntegralDesign brute_force(const DesignPool& pool, const Criterion& c, int k,
                           int b) {
  const int n = static_cast<int>(pool.n());
  if (static_cast<long long>(k) > static_cast<long long>(b) * n) {
    throw infeasible_error("brute_force: k > b*n");
  }
  const double states = count_states(n, k, b);
  if (states > 1e6) {
    throw config_error("brute_force: " + std::to_string(states) +
                       " feasible count vectors exceed the 1e6 budget");
  }

  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::vector<int> best;
  double best_obj = kInf;
  // Lexicographic depth-first enumeration; strict improvement keeps the
  // lexicographically smallest optimum.
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n) {
      if (remaining != 0) return;
      const double obj = eval_counts(pool, c, counts);
      if (best.empty() || strictly_better(obj, best_obj)) {
        best = counts;
        best_obj = obj;
      }
      return;
    }
    const int max_rest = b * (n - pos - 1);
    for (int t = 0; t <= std::min(b, remaining); ++t) {
      if (remaining - t > max_rest) continue;
      counts[static_cast<std::size_t>(pos)] = t;
      self(self, pos + 1, remaining - t);
    }
    counts[static_cast<std::size_t>(pos)] = 0;
  };
  rec(rec, 0, k);
  IntegralDesign out{std::move(best), k, b};
  out.validate();
  return out;
}

}  // namespace oed
