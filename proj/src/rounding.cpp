#include "oed/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace oed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector quad_forms_rows(const RowMatrix& x, const Matrix& a) {
  // (X A) .* X row sums; fine for the n x r sizes seen here.
  return ((x * a).cwiseProduct(x)).rowwise().sum();
}

std::uint64_t counts_hash(const std::vector<int>& counts) {
  std::uint64_t h = 1469598103934665603ull;
  for (int c : counts) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
    h *= 1099511628211ull;
    h ^= h >> 29;
  }
  return h;
}

std::vector<int> top_k_counts(const FractionalDesign& pi) {
  const Eigen::Index n = pi.weights.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return pi.weights(a) > pi.weights(b);
  });
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  int remaining = pi.k;
  for (Eigen::Index i : order) {
    if (remaining == 0) break;
    const int take = std::min(pi.b, remaining);
    counts[static_cast<std::size_t>(i)] = take;
    remaining -= take;
  }
  if (remaining > 0) throw infeasible_error("round_design: k > b*n");
  return counts;
}

Matrix counts_covariance(const RowMatrix& x, const std::vector<int>& counts) {
  const Eigen::Index r = x.cols();
  Matrix z = Matrix::Zero(r, r);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      z.noalias() +=
          counts[i] * x.row(static_cast<Eigen::Index>(i)).transpose() *
          x.row(static_cast<Eigen::Index>(i));
    }
  }
  return 0.5 * (z + z.transpose());
}

struct SingleRun {
  std::vector<int> counts;
  RunDiagnostics diag;
  Matrix initial_z;
  std::vector<std::pair<int, int>> swap_indices;
};

// One swap loop at fixed alpha.  `max_iters` bounds the loop; theory mode
// also stops once lambda_min clears `lambda_target`.  Practical mode adds
// the stall / revisit stop rules.
SingleRun run_swaps(const WhitenedPool& wpool, std::vector<int> counts, int k,
                    int b, double alpha, int max_iters, double lambda_target,
                    bool practical, double eps_over_k) {
  const int r = wpool.rank;
  const double sp = std::sqrt(static_cast<double>(r));
  const double tol = 1e-8 * std::max(1.0, sp);

  SingleRun run;
  run.diag.alpha = alpha;
  run.diag.rank = r;
  run.initial_z = counts_covariance(wpool.points, counts);

  Matrix z = run.initial_z;
  double best_lmin = -kInf;
  int stall = 0;
  std::unordered_set<std::uint64_t> seen;
  seen.insert(counts_hash(counts));

  for (int t = 1; t <= max_iters; ++t) {
    EigenDecomp ze = sym_eig(z);
    const double lmin = ze.eigenvalues(0);
    if (!practical && lmin > lambda_target) break;

    const double c = find_constant(ze, alpha, tol);
    SwapState state{counts, z, ze, c, alpha, t};
    const SwapChoice choice = select_swap(state, wpool, b);
    if (choice.status != SwapStatus::Swap) {
      if (!practical) {
        throw singular_error(
            "round_design: no swap available below the eigenvalue target");
      }
      break;
    }
    if (!practical &&
        choice.removal_score > (1.0 - k * eps_over_k) / k + 1e-9) {
      throw singular_error(
          "round_design: removal score above the guaranteed bound");
    }

    SwapRecord rec;
    rec.iteration = t;
    rec.lambda_min = lmin;
    rec.remove_idx = choice.remove_idx;
    rec.insert_idx = choice.insert_idx;
    rec.removal_score = choice.removal_score;
    rec.insertion_score = choice.insertion_score;
    rec.c = c;
    // <A, Z> and alpha * <A_sqrt, Z> in the eigenbasis of Z.
    double az = 0.0, asz = 0.0;
    for (Eigen::Index j = 0; j < ze.dim(); ++j) {
      const double d = c + alpha * ze.eigenvalues(j);
      az += ze.eigenvalues(j) / (d * d);
      asz += ze.eigenvalues(j) / d;
    }
    rec.full_potential = az;
    rec.half_potential = alpha * asz;
    run.diag.iterations.push_back(rec);

    if (!practical && choice.insertion_score - choice.removal_score <
                          eps_over_k - 1e-9) {
      throw singular_error(
          "round_design: swap progress below the guaranteed margin");
    }

    const Vector xo = wpool.points.row(choice.remove_idx).transpose();
    const Vector xi = wpool.points.row(choice.insert_idx).transpose();
    counts[static_cast<std::size_t>(choice.remove_idx)] -= 1;
    counts[static_cast<std::size_t>(choice.insert_idx)] += 1;
    z.noalias() += xi * xi.transpose() - xo * xo.transpose();
    z = 0.5 * (z + z.transpose());
    run.swap_indices.emplace_back(choice.remove_idx, choice.insert_idx);

    if (practical) {
      const double new_lmin = sym_eig(z).eigenvalues(0);
      const bool rank_deficient = new_lmin <= 1e-12;
      if (new_lmin > best_lmin + 1e-12) {
        best_lmin = new_lmin;
        stall = 0;
      } else if (!rank_deficient) {
        if (++stall >= r) break;
      }
      if (!seen.insert(counts_hash(counts)).second) break;
    }
  }

  run.counts = std::move(counts);
  run.diag.final_lambda_min =
      sym_eig(counts_covariance(wpool.points, run.counts)).eigenvalues(0);
  return run;
}

}  // namespace

WhitenedPool whiten(const DesignPool& pool, const FractionalDesign& pi) {
  pi.validate();
  if (pool.n() != pi.weights.size()) {
    throw input_error("whiten: pool / design size mismatch");
  }
  const Matrix sigma = pool.weighted_covariance(pi.weights);
  const EigenDecomp eig = sym_eig(sigma);
  const double lmax = eig.eigenvalues(eig.dim() - 1);
  if (lmax <= 0.0) throw input_error("whiten: degenerate (all-zero) pool");
  const double rank_tol = 1e-10 * lmax;

  WhitenedPool out;
  const Eigen::Index p = pool.p();
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (eig.eigenvalues(j) > rank_tol) ++r;
  }
  // Span basis = trailing r eigenvector columns (eigenvalues ascending).
  const Matrix basis = eig.eigenvectors.rightCols(r);
  const Vector lam = eig.eigenvalues.tail(r);
  out.transform = basis * lam.cwiseSqrt().cwiseInverse().asDiagonal();
  out.rank = static_cast<int>(r);
  out.points = pool.points() * out.transform;
  out.eligible.assign(static_cast<std::size_t>(pool.n()), 1);
  if (r < p) {
    out.rank_basis = basis;
    for (Eigen::Index i = 0; i < pool.n(); ++i) {
      const Vector x = pool.row(i);
      const double res = (x - basis * (basis.transpose() * x)).norm();
      if (res > 1e-8 * std::max(1.0, x.norm())) {
        out.eligible[static_cast<std::size_t>(i)] = 0;
        out.points.row(i).setZero();
      }
    }
  }
  return out;
}

double find_constant(const EigenDecomp& z_eig, double alpha, double tol) {
  if (alpha <= 0.0) throw input_error("find_constant: alpha must be positive");
  if (tol <= 0.0) throw input_error("find_constant: tol must be positive");
  const Eigen::Index p = z_eig.dim();
  const double lmin = z_eig.eigenvalues(0);
  const double cu0 = std::sqrt(static_cast<double>(p));
  double cl = -alpha * lmin;
  double cu = cu0;
  cl += 1e-12 * (cu - cl);  // the interval is open at -alpha*lambda_min
  const auto trace2 = [&](double c) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double d = c + alpha * z_eig.eigenvalues(j);
      s += 1.0 / (d * d);
    }
    return s;
  };
  while (cu - cl > tol) {
    const double mid = 0.5 * (cl + cu);
    if (trace2(mid) > 1.0) {
      cl = mid;
    } else {
      cu = mid;
    }
  }
  return 0.5 * (cl + cu);
}

std::pair<SymMatrix, SymMatrix> player_matrices(const EigenDecomp& z_eig,
                                                double alpha, double c) {
  const Eigen::Index p = z_eig.dim();
  Vector inv(p), inv2(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double d = c + alpha * z_eig.eigenvalues(j);
    if (d <= 0.0) {
      throw singular_error("player_matrices: c*I + alpha*Z not positive");
    }
    inv(j) = 1.0 / d;
    inv2(j) = inv(j) * inv(j);
  }
  const Matrix& v = z_eig.eigenvectors;
  Matrix a = v * inv2.asDiagonal() * v.transpose();
  Matrix a_sqrt = v * inv.asDiagonal() * v.transpose();
  return {SymMatrix(a), SymMatrix(a_sqrt)};
}

SwapChoice select_swap(const SwapState& state, const WhitenedPool& wpool,
                       int b) {
  const auto [a, a_sqrt] = player_matrices(state.z_eig, state.alpha, state.c);
  const Vector q = quad_forms_rows(wpool.points, a.mat());
  const Vector s = quad_forms_rows(wpool.points, a_sqrt.mat());
  const double alpha = state.alpha;
  const Eigen::Index n = wpool.points.rows();

  SwapChoice out;
  double best_rm = kInf;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (state.counts[static_cast<std::size_t>(i)] < 1) continue;
    const double denom = 1.0 - 2.0 * alpha * s(i);
    if (denom <= 0.0) continue;
    const double score = q(i) / denom;
    if (score < best_rm) {
      best_rm = score;
      out.remove_idx = static_cast<int>(i);
      out.removal_score = score;
    }
  }
  if (out.remove_idx < 0) {
    out.status = SwapStatus::NoEligibleRemoval;
    return out;
  }

  double best_in = -kInf;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (state.counts[static_cast<std::size_t>(j)] >= b) continue;
    if (!wpool.eligible[static_cast<std::size_t>(j)]) continue;
    const double score = q(j) / (1.0 + 2.0 * alpha * s(j));
    if (score > best_in) {
      best_in = score;
      out.insert_idx = static_cast<int>(j);
      out.insertion_score = score;
    }
  }
  if (out.insert_idx < 0) {
    out.status = SwapStatus::AlreadyGood;
    return out;
  }
  out.status = SwapStatus::Swap;
  return out;
}

std::string diagnostics_csv(const RunDiagnostics& diag) {
  std::ostringstream os;
  os << "iteration,lambda_min,removal_score,insertion_score,c\n";
  os.precision(17);
  for (const SwapRecord& r : diag.iterations) {
    os << r.iteration << ',' << r.lambda_min << ',' << r.removal_score << ','
       << r.insertion_score << ',' << r.c << '\n';
  }
  return os.str();
}

std::pair<IntegralDesign, RunDiagnostics> round_design(
    const WhitenedPool& wpool, const FractionalDesign& pi, double epsilon,
    RoundMode mode) {
  pi.validate();
  if (std::abs(pi.total() - pi.k) > 1e-6) {
    throw input_error("round_design: weights must sum to k");
  }
  const int r = wpool.rank;
  const int k = pi.k;
  const int b = pi.b;
  std::vector<int> s0 = top_k_counts(pi);

  SingleRun best;
  if (mode == RoundMode::Theory) {
    if (epsilon <= 0.0 || epsilon > 1.0 / 3.0) {
      throw config_error("round_design: eps in (0, 1/3) required, got " +
                         std::to_string(epsilon));
    }
    if (epsilon == 1.0 / 3.0) {
      std::cerr << "round_design: eps = 1/3 makes the eigenvalue target 0; "
                   "proceeding anyway\n";
    }
    const double need = 5.0 * r / (epsilon * epsilon);
    if (static_cast<double>(k) < need) {
      throw config_error("round_design: k >= 5p/eps^2 violated (k = " +
                         std::to_string(k) +
                         ", bound = " + std::to_string(need) + ")");
    }
    const double alpha = std::sqrt(static_cast<double>(r)) / epsilon;
    const int max_iters = static_cast<int>(std::ceil(k / epsilon));
    best = run_swaps(wpool, std::move(s0), k, b, alpha, max_iters,
                     1.0 - 3.0 * epsilon, false, epsilon / k);
    const CertificateReport cert =
        [&] {
          std::vector<std::pair<Vector, Vector>> swaps;
          swaps.reserve(best.swap_indices.size());
          for (auto [oi, ii] : best.swap_indices) {
            swaps.emplace_back(wpool.points.row(oi).transpose(),
                               wpool.points.row(ii).transpose());
          }
          return regret_certificate(best.diag, SymMatrix(best.initial_z),
                                    swaps, alpha);
        }();
    best.diag.regret_slack = cert.slack;
    if (!cert.ok) {
      std::cerr << "round_design: regret certificate violated (slack "
                << cert.slack << ")\n";
    }
  } else {
    static const double kNu[] = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4,
                                 1.6, 1.8, 2.0, 2.5, 3.0, 4.0, 5.0};
    const double sp = std::sqrt(static_cast<double>(r));
    const int max_iters = std::max(1000, 20 * k);
    double best_lmin = -kInf;
    for (double nu : kNu) {
      SingleRun run = run_swaps(wpool, s0, k, b, nu * sp, max_iters, kInf,
                                true, 0.0);
      if (run.diag.final_lambda_min > best_lmin) {
        best_lmin = run.diag.final_lambda_min;
        best = std::move(run);
      }
    }
  }

  IntegralDesign out{std::move(best.counts), k, b};
  out.validate();
  return {std::move(out), std::move(best.diag)};
}

CertificateReport regret_certificate(
    const RunDiagnostics& diag, const SymMatrix& initial_z,
    const std::vector<std::pair<Vector, Vector>>& swaps, double alpha) {
  Matrix z = initial_z.mat();
  for (const auto& [out_pt, in_pt] : swaps) {
    z.noalias() += in_pt * in_pt.transpose() - out_pt * out_pt.transpose();
  }
  const EigenDecomp ze = sym_eig(0.5 * (z + z.transpose()));
  const double p = static_cast<double>(ze.dim());

  CertificateReport rep;
  rep.lhs = -ze.eigenvalues(0);
  double score_sum = 0.0;
  for (const SwapRecord& r : diag.iterations) {
    score_sum += r.removal_score - r.insertion_score;
  }
  rep.rhs = score_sum + 2.0 * std::sqrt(p) / alpha;
  rep.slack = rep.rhs - rep.lhs;
  const double tol =
      1e-6 * std::max<double>(1.0, static_cast<double>(diag.iterations.size()));
  rep.ok = rep.slack >= -tol;
  return rep;
}

std::pair<IntegralDesign, SelectReport> select(
    const DesignPool& pool, const Criterion& c, int k, int b, double epsilon,
    RoundMode mode, const std::optional<MdConfig>& md) {
  c.validate();
  const int n = static_cast<int>(pool.n());
  if (k <= 0 || b <= 0) throw input_error("select: k and b must be positive");
  if (static_cast<long long>(k) > static_cast<long long>(b) * n) {
    throw infeasible_error("select: k > b*n is infeasible");
  }

  SelectReport rep;
  rep.mode = mode;

  if (c.kind == CriterionKind::T) {
    IntegralDesign s = t_optimal_exact(pool, k, b);
    rep.objective = eval(c, pool.weighted_covariance(s.counts_vector()), &pool);
    rep.relaxation_objective = rep.objective;
    rep.ratio = 1.0;
    rep.lambda_min_whitened = 1.0;
    return {std::move(s), rep};
  }

  MdConfig cfg = md.value_or(MdConfig{});
  cfg.target_delta = epsilon / 2.0;
  // Without an explicit config, smooth at half the relaxation target.
  if (!md) cfg.smoothing_lambda = epsilon / 4.0;
  RelaxResult relax = solve_relaxation(c, pool, k, b, cfg);
  rep.relaxation_objective = relax.objective;

  const WhitenedPool wpool = whiten(pool, relax.design);
  auto [design, diag] = round_design(wpool, relax.design, epsilon, mode);
  rep.diagnostics = std::move(diag);
  rep.alpha = rep.diagnostics.alpha;
  rep.lambda_min_whitened = rep.diagnostics.final_lambda_min;
  rep.objective = eval(c, pool.weighted_covariance(design.counts_vector()), &pool);
  rep.ratio = rep.objective / rep.relaxation_objective;
  return {std::move(design), rep};
}

}  // namespace oed
