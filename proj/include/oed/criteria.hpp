#pragma once

#include <optional>
#include <string>

#include "oed/core.hpp"
#include "oed/design.hpp"

namespace oed {

enum class CriterionKind { A, D, T, E, V, G };

struct BayesParams {
  double prior_lambda = 0.0;  // > 0
  double noise_sigma = 0.0;   // > 0
};

/// Optimality criterion: one of A/D/T/E/V/G, optionally in Bayesian form
/// where f is applied to (prior_lambda / noise_sigma^2) * I + Sigma.
struct Criterion {
  CriterionKind kind = CriterionKind::A;
  std::optional<BayesParams> bayes;

  bool is_bayes() const { return bayes.has_value(); }
  double bayes_shift() const {
    return bayes ? bayes->prior_lambda / (bayes->noise_sigma * bayes->noise_sigma)
                 : 0.0;
  }
  // V and G need the design matrix to evaluate.
  bool needs_pool() const {
    return kind == CriterionKind::V || kind == CriterionKind::G;
  }
  // A/T/V are differentiable; D is optimized in log form (differentiable);
  // E/G are subdifferentiable only.
  bool differentiable() const {
    return kind != CriterionKind::E && kind != CriterionKind::G;
  }
  bool log_mode() const { return kind == CriterionKind::D; }

  void validate() const;
};

Criterion make_criterion(CriterionKind kind,
                         std::optional<BayesParams> bayes = std::nullopt);
CriterionKind parse_criterion_kind(const std::string& letter);
std::string criterion_letter(CriterionKind kind);

/// Criterion value at covariance sigma.  Returns +inf when sigma (after the
/// Bayesian shift) is singular and the criterion requires inversion.
double eval(const Criterion& c, const SymMatrix& sigma,
            const DesignPool* pool = nullptr);
double eval(const Criterion& c, const Matrix& sigma,
            const DesignPool* pool = nullptr);

/// A subgradient of f (of log f for the D criterion) with respect to Sigma.
/// Requires Sigma (after the Bayesian shift) strictly positive definite.
SymMatrix grad_sigma(const Criterion& c, const SymMatrix& sigma,
                     const DesignPool* pool = nullptr);

struct RegularityParams {
  double lipschitz = 0.0;  // L_lambda
  double mu0 = 0.0;        // objective lower bound
  bool log_mode = false;   // optimize log f instead of f
};

/// Smoothed-objective Lipschitz constant and objective lower bound for the
/// given criterion.  `lambda_smooth` is the smoothing level at which L is
/// evaluated.  Bayesian variants get a lambda-independent L driven by the
/// prior shift.
RegularityParams regularity_params(const Criterion& c, const PoolStats& stats,
                                   double lambda_smooth, int k, int b);

/// Exact T-optimal design: greedily assign multiplicity up to b to points in
/// decreasing squared-norm order until k assignments are made.
IntegralDesign t_optimal_exact(const DesignPool& pool, int k, int b);

}  // namespace oed
