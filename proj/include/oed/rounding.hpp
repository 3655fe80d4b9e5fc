#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oed/criteria.hpp"
#include "oed/design.hpp"
#include "oed/relaxation.hpp"

namespace oed {

/// Pool after the change of basis that turns the fractional covariance into
/// the identity.  When the fractional covariance is rank-deficient the points
/// are expressed in coordinates of its span (dimension `rank` < p) and points
/// outside the span are marked ineligible (their whitened row is zero).
struct WhitenedPool {
  RowMatrix points;                  // n x rank
  Matrix transform;                  // p x rank; x_tilde = transform^T x
  std::optional<Matrix> rank_basis;  // p x rank span basis, set when singular
  std::vector<char> eligible;        // in-span mask
  int rank = 0;
};

WhitenedPool whiten(const DesignPool& pool, const FractionalDesign& pi);

/// The unique c in (-alpha*lambda_min(Z), sqrt(p)] with
/// sum_i (c + alpha*lambda_i)^{-2} = 1, by bisection to additive `tol`.
double find_constant(const EigenDecomp& z_eig, double alpha, double tol);

/// A = (cI + alpha Z)^{-2} and A_sqrt = (cI + alpha Z)^{-1}, from the shared
/// eigenbasis of Z.  tr(A) = 1 up to the find_constant tolerance.
std::pair<SymMatrix, SymMatrix> player_matrices(const EigenDecomp& z_eig,
                                                double alpha, double c);

struct SwapState {
  std::vector<int> counts;
  Matrix z;           // sum_i counts_i * x~_i x~_i^T
  EigenDecomp z_eig;
  double c = 0.0;
  double alpha = 0.0;
  int iteration = 0;
};

enum class SwapStatus { Swap, NoEligibleRemoval, AlreadyGood };

struct SwapChoice {
  SwapStatus status = SwapStatus::Swap;
  int remove_idx = -1;
  int insert_idx = -1;
  double removal_score = 0.0;
  double insertion_score = 0.0;
};

/// Pick the removal index minimizing q_i / (1 - 2*alpha*s_i) over points with
/// counts_i >= 1 and 2*alpha*s_i < 1, and the insertion index maximizing
/// q_j / (1 + 2*alpha*s_j) over points with counts_j < b, where q = x^T A x
/// and s = x^T A_sqrt x.  Ties go to the lowest index.
SwapChoice select_swap(const SwapState& state, const WhitenedPool& wpool,
                       int b);

struct SwapRecord {
  int iteration = 0;
  double lambda_min = 0.0;
  int remove_idx = -1;
  int insert_idx = -1;
  double removal_score = 0.0;
  double insertion_score = 0.0;
  double half_potential = 0.0;  // alpha * <A_sqrt, Z>, bounded by p+alpha*sqrt(p)
  double full_potential = 0.0;  // <A, Z>, bounded by sqrt(p)/alpha + lambda_min
  double c = 0.0;
};

struct RunDiagnostics {
  std::vector<SwapRecord> iterations;
  double final_lambda_min = 0.0;
  double regret_slack = 0.0;  // certificate slack, >= 0 when the bound holds
  double alpha = 0.0;
  int rank = 0;
};

std::string diagnostics_csv(const RunDiagnostics& diag);

enum class RoundMode { Theory, Practical };

/// Swap rounding.  Theory mode uses alpha = sqrt(p)/eps, T = ceil(k/eps) and
/// runs until lambda_min of the whitened covariance exceeds 1 - 3*eps.
/// Practical mode sweeps an alpha grid and keeps the run with the largest
/// final lambda_min.
std::pair<IntegralDesign, RunDiagnostics> round_design(
    const WhitenedPool& wpool, const FractionalDesign& pi, double epsilon,
    RoundMode mode);

struct CertificateReport {
  double lhs = 0.0;    // -lambda_min of the final whitened covariance
  double rhs = 0.0;    // recorded score sum + 2*sqrt(p)/alpha
  double slack = 0.0;  // rhs - lhs
  bool ok = false;
};

/// Replays a swap trace and checks the online bound
/// -lambda_min(Z_T) <= sum_t (removal_score_t - insertion_score_t)
///                      + 2*sqrt(p)/alpha
/// within 1e-6 * max(1, T) slack.
CertificateReport regret_certificate(
    const RunDiagnostics& diag, const SymMatrix& initial_z,
    const std::vector<std::pair<Vector, Vector>>& swaps, double alpha);

struct SelectReport {
  double objective = 0.0;             // F at the integral design
  double relaxation_objective = 0.0;  // F at the fractional design
  double ratio = 0.0;
  double lambda_min_whitened = 0.0;
  RoundMode mode = RoundMode::Practical;
  double alpha = 0.0;
  RunDiagnostics diagnostics;
};

/// Full pipeline: relaxation (target delta = eps/2), whitening, rounding.
/// The T criterion short-circuits to its exact greedy solution.
std::pair<IntegralDesign, SelectReport> select(
    const DesignPool& pool, const Criterion& c, int k, int b, double epsilon,
    RoundMode mode, const std::optional<MdConfig>& md = std::nullopt);

}  // namespace oed
