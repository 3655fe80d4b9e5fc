#include "oed/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool effectively_singular(const EigenDecomp& eig) {
  const double lmax = eig.eigenvalues(eig.dim() - 1);
  return eig.eigenvalues(0) <= 1e-12 * std::max(1.0, lmax);
}

Matrix shifted(const Criterion& c, const Matrix& sigma) {
  const double t = c.bayes_shift();
  if (t == 0.0) return sigma;
  return sigma + t * Matrix::Identity(sigma.rows(), sigma.cols());
}

}  // namespace

void Criterion::validate() const {
  if (bayes && (bayes->prior_lambda <= 0.0 || bayes->noise_sigma <= 0.0)) {
    throw input_error("Criterion: Bayesian parameters must be positive");
  }
}

Criterion make_criterion(CriterionKind kind, std::optional<BayesParams> bayes) {
  Criterion c{kind, std::move(bayes)};
  c.validate();
  return c;
}

CriterionKind parse_criterion_kind(const std::string& letter) {
  if (letter.size() == 1) {
    switch (letter[0]) {
      case 'A': return CriterionKind::A;
      case 'D': return CriterionKind::D;
      case 'T': return CriterionKind::T;
      case 'E': return CriterionKind::E;
      case 'V': return CriterionKind::V;
      case 'G': return CriterionKind::G;
      default: break;
    }
  }
  throw input_error("unknown criterion: " + letter);
}

std::string criterion_letter(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::A: return "A";
    case CriterionKind::D: return "D";
    case CriterionKind::T: return "T";
    case CriterionKind::E: return "E";
    case CriterionKind::V: return "V";
    case CriterionKind::G: return "G";
  }
  return "?";
}

double eval(const Criterion& c, const Matrix& sigma, const DesignPool* pool) {
  c.validate();
  if (c.needs_pool() && pool == nullptr) {
    throw input_error("eval: V/G criteria need the design pool");
  }
  const Matrix s = shifted(c, SymMatrix(sigma).mat());
  const Eigen::Index p = s.rows();
  const EigenDecomp eig = sym_eig(s);

  if (c.kind == CriterionKind::T) {
    const double tr = eig.eigenvalues.sum();
    return tr > 0.0 ? static_cast<double>(p) / tr : kInf;
  }
  if (effectively_singular(eig)) return kInf;

  switch (c.kind) {
    case CriterionKind::A:
      return eig.eigenvalues.cwiseInverse().sum() / static_cast<double>(p);
    case CriterionKind::D:
      return std::exp(-eig.eigenvalues.array().log().sum() /
                      static_cast<double>(p));
    case CriterionKind::E:
      return 1.0 / eig.eigenvalues(0);
    case CriterionKind::V: {
      const Matrix inv = psd_power(eig, -1.0);
      return pool->quad_forms(inv).mean();
    }
    case CriterionKind::G: {
      const Matrix inv = psd_power(eig, -1.0);
      return pool->quad_forms(inv).maxCoeff();
    }
    default:
      break;
  }
  throw input_error("eval: unreachable criterion kind");
}

double eval(const Criterion& c, const SymMatrix& sigma, const DesignPool* pool) {
  return eval(c, sigma.mat(), pool);
}

SymMatrix grad_sigma(const Criterion& c, const SymMatrix& sigma,
                     const DesignPool* pool) {
  c.validate();
  if (c.needs_pool() && pool == nullptr) {
    throw input_error("grad_sigma: V/G criteria need the design pool");
  }
  const Matrix s = shifted(c, sigma.mat());
  const Eigen::Index p = s.rows();
  const EigenDecomp eig = sym_eig(s);
  const double dp = static_cast<double>(p);

  if (c.kind == CriterionKind::T) {
    const double tr = eig.eigenvalues.sum();
    if (tr <= 0.0) throw singular_error("grad_sigma: zero trace");
    return SymMatrix(-(dp / (tr * tr)) * Matrix::Identity(p, p));
  }
  if (effectively_singular(eig)) {
    throw singular_error("grad_sigma: singular covariance");
  }

  switch (c.kind) {
    case CriterionKind::A:
      return SymMatrix(-psd_power(eig, -2.0) / dp);
    case CriterionKind::D:
      // Subgradient of the log form -(1/p) log det.
      return SymMatrix(-psd_power(eig, -1.0) / dp);
    case CriterionKind::E: {
      const Vector u = eig.eigenvectors.col(0);
      const double lmin = eig.eigenvalues(0);
      return SymMatrix(-(u * u.transpose()) / (lmin * lmin));
    }
    case CriterionKind::V: {
      const Matrix inv = psd_power(eig, -1.0);
      const Matrix xtx =
          pool->points().transpose() * pool->points();
      return SymMatrix(-(inv * xtx * inv) / static_cast<double>(pool->n()));
    }
    case CriterionKind::G: {
      const Matrix inv = psd_power(eig, -1.0);
      const Vector q = pool->quad_forms(inv);
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < q.size(); ++i) {
        if (q(i) > q(best)) best = i;  // ties keep the lowest index
      }
      const Vector w = inv * pool->row(best);
      return SymMatrix(-(w * w.transpose()));
    }
    default:
      break;
  }
  throw input_error("grad_sigma: unreachable criterion kind");
}

RegularityParams regularity_params(const Criterion& c, const PoolStats& stats,
                                   double lambda_smooth, int k, int b) {
  c.validate();
  if (stats.sigma_lo <= 0.0) {
    throw config_error(
        "regularity_params: sigma_lo = 0 makes the Lipschitz bound unbounded");
  }
  if (lambda_smooth <= 0.0) {
    throw input_error("regularity_params: lambda_smooth must be positive");
  }
  if (stats.dim <= 0) throw input_error("regularity_params: stats.dim missing");
  const double B2 = stats.max_norm * stats.max_norm;
  const double slo = stats.sigma_lo;
  const double shi = stats.sigma_hi;
  const double kb = static_cast<double>(k) * static_cast<double>(b);
  const double p = static_cast<double>(stats.dim);

  // The Bayesian shift plays the role of lambda * sigma_lo in the smoothing
  // bound, making L independent of lambda.
  const double lam_eff = c.is_bayes() ? c.bayes_shift() : lambda_smooth * slo;
  const double mu_den = kb * shi + c.bayes_shift();

  RegularityParams out;
  switch (c.kind) {
    case CriterionKind::A:
      out.lipschitz = B2 / (lam_eff * lam_eff * p);
      out.mu0 = 1.0 / mu_den;
      break;
    case CriterionKind::T:
      out.lipschitz = B2 / lam_eff;
      out.mu0 = 1.0 / mu_den;
      break;
    case CriterionKind::E:
      out.lipschitz = B2 / (lam_eff * lam_eff);
      out.mu0 = 1.0 / mu_den;
      break;
    case CriterionKind::V:
      out.lipschitz = B2 * shi / (lam_eff * lam_eff);
      out.mu0 = slo / mu_den;
      break;
    case CriterionKind::G:
      out.lipschitz = B2 / (lam_eff * lam_eff);
      out.mu0 = B2 / mu_den;
      break;
    case CriterionKind::D:
      out.lipschitz = B2 / (lam_eff * p);
      out.mu0 = 1.0 / mu_den;
      out.log_mode = true;
      break;
  }
  return out;
}

IntegralDesign t_optimal_exact(const DesignPool& pool, int k, int b) {
  const Eigen::Index n = pool.n();
  if (k <= 0 || b <= 0) throw input_error("t_optimal_exact: k, b must be positive");
  if (static_cast<long long>(k) > static_cast<long long>(b) * n) {
    throw infeasible_error("t_optimal_exact: k > b*n");
  }
  Vector norms = pool.points().rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index c) { return norms(a) > norms(c); });
  IntegralDesign d;
  d.counts.assign(static_cast<std::size_t>(n), 0);
  d.k = k;
  d.b = b;
  int remaining = k;
  for (Eigen::Index idx : order) {
    if (remaining == 0) break;
    const int take = std::min(b, remaining);
    d.counts[static_cast<std::size_t>(idx)] = take;
    remaining -= take;
  }
  return d;
}

}  // namespace oed
