#include "oed/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace oed {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void MdConfig::validate() const {
  if (smoothing_lambda <= 0.0 || smoothing_lambda >= 1.0) {
    throw input_error("MdConfig: smoothing_lambda must be in (0,1)");
  }
  if (iterations < 0) throw input_error("MdConfig: iterations must be >= 0");
  if (gamma0 <= 0.0) throw input_error("MdConfig: gamma0 must be positive");
}

Vector project_box_simplex(const Vector& omega, double cap) {
  const Eigen::Index n = omega.size();
  if (n == 0) throw input_error("project_box_simplex: empty vector");
  if (cap * static_cast<double>(n) < 1.0 - 1e-12) {
    throw infeasible_error("project_box_simplex: cap * n < 1");
  }
  if (std::abs(omega.sum() - 1.0) > 1e-8 || omega.minCoeff() < -1e-12) {
    throw input_error("project_box_simplex: input not on the simplex");
  }
  if (omega.maxCoeff() <= cap) return omega;

  // Sort descending, ties by original index.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return omega(a) > omega(b);
  });

  // Suffix sums of the sorted weights; computing the scaled-tail mass as
  // 1 - prefix cancels catastrophically when one coordinate dominates.
  std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    suffix[static_cast<std::size_t>(r)] =
        suffix[static_cast<std::size_t>(r) + 1] +
        omega(order[static_cast<std::size_t>(r)]);
  }

  // Scan over q: the q-1 largest coordinates get capped at `cap`, the rest
  // are scaled by C = (1 - cap*(q-1)) / Z_{q-1}.  Track the running KL value
  // and keep the feasible split with the smallest one.
  double kl_capped = cap * std::log(cap / omega(order[0]));
  double best_kl = kInf;
  Eigen::Index best_q = -1;
  double best_c = 0.0;
  for (Eigen::Index q = 2; q <= n; ++q) {
    const double z = suffix[static_cast<std::size_t>(q - 1)];
    if (z > 0.0) {
      const double c = (1.0 - cap * static_cast<double>(q - 1)) / z;
      const double wq = omega(order[static_cast<std::size_t>(q - 1)]);
      if (c > 0.0 && c * wq <= cap * (1.0 + 1e-12)) {
        const double kl = kl_capped + c * std::log(c) * z;
        if (kl <= best_kl) {
          best_kl = kl;
          best_q = q;
          best_c = c;
        }
      }
    }
    if (q < n) {
      const double wq = omega(order[static_cast<std::size_t>(q - 1)]);
      if (wq <= 0.0) break;  // only zeros remain; capping them is never optimal
      kl_capped += cap * std::log(cap / wq);
    }
  }
  Vector out(n);
  if (best_q < 0) {
    // The positive support cannot carry the mass (coordinates underflowed to
    // exact zero): fill `cap` down the sorted order and stop.
    double remaining = 1.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double y = std::min(cap, remaining);
      out(order[static_cast<std::size_t>(r)]) = y;
      remaining -= y;
    }
    return out;
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index i = order[static_cast<std::size_t>(r)];
    out(i) = (r < best_q - 1) ? cap : best_c * omega(i);
  }
  return out;
}

Vector md_step(const Vector& omega, const Vector& grad, double eta, double cap) {
  if (omega.size() != grad.size()) {
    throw input_error("md_step: dimension mismatch");
  }
  if (!grad.allFinite()) throw input_error("md_step: non-finite gradient");
  Vector w(omega.size());
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    const double e = std::clamp(-eta * grad(i), -700.0, 700.0);
    w(i) = omega(i) * std::exp(e);
  }
  const double s = w.sum();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw singular_error("md_step: degenerate reweighting");
  }
  w /= s;
  return project_box_simplex(w, cap);
}

namespace {

Vector smoothed_weights(const Vector& omega, int k, int n, double lambda) {
  const double scale = static_cast<double>(k) / (1.0 + lambda);
  return scale *
         (omega.array() + lambda / static_cast<double>(n)).matrix();
}

}  // namespace

double smoothed_objective(const Criterion& c, const DesignPool& pool,
                          const Vector& omega, int k, int b,
                          double lambda_smooth) {
  (void)b;
  const Vector w = smoothed_weights(omega, k, static_cast<int>(pool.n()),
                                    lambda_smooth);
  const double v = eval(c, pool.weighted_covariance(w), &pool);
  return c.log_mode() ? std::log(v) : v;
}

Vector smoothed_gradient(const Criterion& c, const DesignPool& pool,
                         const Vector& omega, int k, int b,
                         double lambda_smooth) {
  (void)b;
  const Vector w = smoothed_weights(omega, k, static_cast<int>(pool.n()),
                                    lambda_smooth);
  const Matrix sigma = pool.weighted_covariance(w);
  const Matrix g = grad_sigma(c, SymMatrix(sigma), &pool).mat();
  const double scale = static_cast<double>(k) / (1.0 + lambda_smooth);
  return scale * pool.quad_forms(g);
}

int iteration_budget(const Criterion& c, const PoolStats& stats, double delta,
                     int k, int b, int n) {
  if (delta <= 0.0 || delta > 1.0) {
    throw input_error("iteration_budget: delta must be in (0,1]");
  }
  const double lambda_tilde = static_cast<double>(k) * delta / 2.0;
  const RegularityParams rp = regularity_params(c, stats, lambda_tilde, k, b);
  double t = rp.lipschitz * rp.lipschitz * static_cast<double>(k) *
             static_cast<double>(k) * std::log(static_cast<double>(n)) /
             (delta * delta);
  if (!rp.log_mode) t /= rp.mu0 * rp.mu0;
  constexpr double kCap = 1e6;
  if (t > kCap) {
    std::cerr << "iteration_budget: theoretical budget " << t
              << " exceeds cap " << static_cast<long long>(kCap)
              << "; capping\n";
    t = kCap;
  }
  return std::max(1, static_cast<int>(std::ceil(t)));
}

FractionalDesign pad_to_budget(const FractionalDesign& pi) {
  pi.validate();
  FractionalDesign out = pi;
  double deficit = static_cast<double>(pi.k) - out.weights.sum();
  if (deficit <= 0.0) return out;
  const double b = static_cast<double>(pi.b);
  for (Eigen::Index i = 0; i < out.weights.size() && deficit > 0.0; ++i) {
    const double room = b - out.weights(i);
    const double add = std::min(room, deficit);
    if (add > 0.0) {
      out.weights(i) += add;
      deficit -= add;
    }
  }
  if (deficit > 1e-9) {
    throw infeasible_error("pad_to_budget: k > b*n, cannot reach the budget");
  }
  return out;
}

RelaxResult solve_relaxation(const Criterion& c, const DesignPool& pool, int k,
                             int b, const MdConfig& config) {
  config.validate();
  c.validate();
  const int n = static_cast<int>(pool.n());
  if (k <= 0 || b <= 0) throw input_error("solve_relaxation: k, b positive");
  if (static_cast<long long>(k) > static_cast<long long>(b) * n) {
    throw infeasible_error("solve_relaxation: k > b*n is infeasible");
  }

  const double lambda = config.smoothing_lambda;
  const double cap = std::min(1.0, static_cast<double>(b) / k);
  const auto objective = [&](const Vector& om) {
    return smoothed_objective(c, pool, om, k, b, lambda);
  };

  RelaxResult res;
  if (n == 1) {
    FractionalDesign pi{Vector::Constant(1, static_cast<double>(k)), k, b};
    res.design = pad_to_budget(pi);
    res.objective = eval(c, pool.weighted_covariance(res.design.weights), &pool);
    return res;
  }

  StepMode step_mode = config.step_mode;
  if (step_mode == StepMode::LineSearch && !c.differentiable()) {
    step_mode = StepMode::SqrtDecay;  // no usable line-search test
  }

  Vector omega = Vector::Constant(n, 1.0 / n);
  Vector omega_sum = Vector::Zero(n);
  const int T = config.iterations > 0 ? config.iterations
                                      : (c.differentiable() ? 100 : 1000);
  res.trace.reserve(static_cast<std::size_t>(T));

  // Theory step size eta_t = (1/L~) sqrt(log n / (t+1)) with L~ = k * L_{k*lambda}.
  double theory_l = 0.0;
  if (step_mode == StepMode::Theory) {
    const PoolStats stats = compute_pool_stats(pool);
    theory_l = static_cast<double>(k) *
               regularity_params(c, stats, static_cast<double>(k) * lambda, k, b)
                   .lipschitz;
  }

  double gamma = config.gamma0;
  double f_cur = objective(omega);
  const double logn = std::log(static_cast<double>(n));
  Vector best_omega = omega;
  double best_f = f_cur;

  for (int t = 0; t < T; ++t) {
    omega_sum += omega;
    if (f_cur < best_f) {
      best_f = f_cur;
      best_omega = omega;
    }
    const Vector g = smoothed_gradient(c, pool, omega, k, b, lambda);
    double eta = 0.0;
    Vector next;
    double f_next = 0.0;
    switch (step_mode) {
      case StepMode::Theory:
        eta = std::sqrt(logn / (t + 1)) / theory_l;
        next = md_step(omega, g, eta, cap);
        f_next = objective(next);
        break;
      case StepMode::LineSearch: {
        eta = 1.0;
        for (int h = 0; h < 60; ++h) {
          next = md_step(omega, g, eta, cap);
          f_next = objective(next);
          const double armijo = f_cur + 0.5 * g.dot(next - omega);
          if (f_next <= armijo) break;
          eta *= 0.5;
        }
        break;
      }
      case StepMode::SqrtDecay:
        eta = gamma / std::sqrt(static_cast<double>(t + 1));
        next = md_step(omega, g, eta, cap);
        f_next = objective(next);
        if (f_next >= 2.0 * f_cur) gamma *= 0.5;
        break;
    }
    res.trace.push_back(TraceRow{t, f_cur, eta});
    omega = std::move(next);
    f_cur = f_next;
  }

  if (f_cur < best_f) {
    best_f = f_cur;
    best_omega = omega;
  }
  // The averaged iterate carries the convergence guarantee; keep the best
  // single iterate instead when it evaluates lower.
  Vector avg = (omega_sum / static_cast<double>(T)).cwiseMax(0.0);
  if (objective(avg) > best_f) avg = best_omega;
  FractionalDesign pi{static_cast<double>(k) * avg, k, b};
  res.design = pad_to_budget(pi);
  res.objective =
      eval(c, pool.weighted_covariance(res.design.weights), &pool);
  return res;
}

}  // namespace oed
