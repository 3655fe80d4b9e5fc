#pragma once

#include <vector>

#include "oed/criteria.hpp"
#include "oed/design.hpp"

namespace oed {

enum class StepMode { Theory, LineSearch, SqrtDecay };

struct MdConfig {
  double smoothing_lambda = 1e-3;  // in (0,1)
  int iterations = 0;              // 0 = default 100 / 1000 (nondifferentiable)
  StepMode step_mode = StepMode::LineSearch;  // downgraded to SqrtDecay for
                                              // nondifferentiable criteria
  double gamma0 = 1.0;       // initial step scale for SqrtDecay
  double target_delta = 0.1; // delta used when deriving theory parameters

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;  // smoothed objective (log form when applicable)
  double step_size = 0.0;
};

struct RelaxResult {
  FractionalDesign design;
  std::vector<TraceRow> trace;
  double objective = 0.0;  // unsmoothed F(pi) of the returned design
};

/// Exact KL projection onto {y in simplex : y_i <= cap}.  `omega` must lie on
/// the simplex; requires cap * n >= 1.
Vector project_box_simplex(const Vector& omega, double cap);

/// One mirror-descent step: multiplicative reweighting by exp(-eta * grad),
/// renormalization, then the box-simplex projection.
Vector md_step(const Vector& omega, const Vector& grad, double eta, double cap);

/// Smoothed objective f( sum_i (k/(1+lambda)) (omega_i + lambda/n) x_i x_i^T ),
/// in log form when the criterion is log-mode.
double smoothed_objective(const Criterion& c, const DesignPool& pool,
                          const Vector& omega, int k, int b,
                          double lambda_smooth);

/// Per-coordinate subgradient of the smoothed objective at omega.
Vector smoothed_gradient(const Criterion& c, const DesignPool& pool,
                         const Vector& omega, int k, int b,
                         double lambda_smooth);

/// Iteration count ceil(delta^-2 mu0^-2 L^2 k^2 log n) with unit leading
/// constant (mu0^-2 dropped in log mode), capped at 1e6.
int iteration_budget(const Criterion& c, const PoolStats& stats, double delta,
                     int k, int b, int n);

/// Raise coordinates (lowest index first) toward b until the weights sum to
/// exactly k.
FractionalDesign pad_to_budget(const FractionalDesign& pi);

/// Projected entropic mirror descent on the smoothed relaxation; returns
/// pi = k * (averaged iterate), padded to sum exactly k.
RelaxResult solve_relaxation(const Criterion& c, const DesignPool& pool, int k,
                             int b, const MdConfig& config);

}  // namespace oed
