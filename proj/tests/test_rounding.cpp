#include <cmath>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "oed/baselines.hpp"
#include "oed/rounding.hpp"

using namespace oed;
using testutil::gaussian_pool;
using testutil::gaussian_rows;
using testutil::random_psd;
using testutil::random_simplex;

namespace {

FractionalDesign uniform_fraction(int n, int k, int b) {
  FractionalDesign pi;
  pi.weights = Vector::Constant(n, static_cast<double>(k) / n);
  pi.k = k;
  pi.b = b;
  return pi;
}

FractionalDesign random_fraction(int n, int k, int b, Rng& rng) {
  const Vector omega =
      project_box_simplex(random_simplex(n, rng),
                          static_cast<double>(b) / k);
  FractionalDesign pi;
  pi.weights = static_cast<double>(k) * omega;
  pi.k = k;
  pi.b = b;
  return pi;
}

Matrix whitened_covariance(const WhitenedPool& w, const Vector& weights) {
  Matrix z = Matrix::Zero(w.rank, w.rank);
  for (Eigen::Index i = 0; i < w.points.rows(); ++i) {
    if (weights(i) != 0.0) {
      z += weights(i) * w.points.row(i).transpose() * w.points.row(i);
    }
  }
  return z;
}

}  // namespace

TEST_CASE("whiten identity and diagonal cases") {
  RowMatrix x(2, 2);
  x << 1, 0, 0, 1;
  const DesignPool pool(x);
  const WhitenedPool w = whiten(pool, uniform_fraction(2, 2, 1));
  CHECK((w.points.cwiseAbs() - x.cwiseAbs()).norm() <= 1e-12);

  RowMatrix x2(2, 2);
  x2 << 2, 0, 0, 1;
  const DesignPool pool2(x2);
  const WhitenedPool w2 = whiten(pool2, uniform_fraction(2, 2, 1));
  for (int i = 0; i < 2; ++i) {
    CHECK(w2.points.row(i).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("whitened fractional covariance is the identity") {
  Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8, p = 3, k = 4;
    const DesignPool pool = gaussian_pool(n, p, rng);
    const FractionalDesign pi = random_fraction(n, k, 1, rng);
    const WhitenedPool w = whiten(pool, pi);
    CHECK(w.rank == p);
    const Matrix id = whitened_covariance(w, pi.weights);
    CHECK((id - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("whiten handles a rank-deficient fractional covariance") {
  RowMatrix x(3, 2);
  x << 1, 0, 2, 0, 0, 1;
  const DesignPool pool(x);
  FractionalDesign pi;
  pi.weights = Vector::Zero(3);
  pi.weights(0) = 1.0;
  pi.weights(1) = 1.0;
  pi.k = 2;
  pi.b = 1;
  const WhitenedPool w = whiten(pool, pi);
  CHECK(w.rank == 1);
  CHECK(w.rank_basis.has_value());
  CHECK(w.eligible[0] == 1);
  CHECK(w.eligible[1] == 1);
  CHECK(w.eligible[2] == 0);
  CHECK(w.points.row(2).norm() == doctest::Approx(0.0));
  const Matrix id = whitened_covariance(w, pi.weights);
  CHECK(id(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("whiten rejects an all-zero pool") {
  const DesignPool pool(RowMatrix::Zero(2, 2));
  CHECK_THROWS_AS(whiten(pool, uniform_fraction(2, 2, 1)), input_error);
}

TEST_CASE("whitening preserves eigenvalue comparisons") {
  Rng rng(43);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8, p = 3, k = 4;
    const DesignPool pool = gaussian_pool(n, p, rng);
    const FractionalDesign pi = random_fraction(n, k, 1, rng);
    const WhitenedPool w = whiten(pool, pi);
    Vector s = Vector::Zero(n);
    for (int i = 0; i < k; ++i) {
      s(static_cast<Eigen::Index>(rng.next_below(n))) += 1.0;
    }
    const double lmin_w =
        sym_eig(whitened_covariance(w, s)).eigenvalues(0);
    const Matrix sigma_hat = pool.weighted_covariance(pi.weights);
    const Matrix root = psd_power(SymMatrix(sigma_hat), -0.5).mat();
    const Matrix conj = root * pool.weighted_covariance(s) * root;
    const double lmin_c = sym_eig(Matrix(conj)).eigenvalues(0);
    CHECK(lmin_w == doctest::Approx(lmin_c).epsilon(1e-8));
  }
}

TEST_CASE("find_constant closed forms") {
  // Z = I2, alpha = 2: 2/(c+2)^2 = 1 at c = sqrt(2) - 2.
  const EigenDecomp id2{Vector::Constant(2, 1.0), Matrix::Identity(2, 2)};
  CHECK(find_constant(id2, 2.0, 1e-10) ==
        doctest::Approx(std::sqrt(2.0) - 2.0));
  // p = 1, scalar z: c = 1 - alpha z.
  const EigenDecomp z1{Vector::Constant(1, 0.25), Matrix::Identity(1, 1)};
  CHECK(find_constant(z1, 1.0, 1e-10) == doctest::Approx(0.75));
}

TEST_CASE("find_constant matches an independent scalar root finder") {
  // Z eigenvalues (0, 1), alpha = 1: 1/c^2 + 1/(c+1)^2 = 1.
  Vector ev(2);
  ev << 0.0, 1.0;
  const EigenDecomp ze{ev, Matrix::Identity(2, 2)};
  const double c = find_constant(ze, 1.0, 1e-10);
  // Newton iteration from an interior point as an independent check.
  double x = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double f = 1.0 / (x * x) + 1.0 / ((x + 1) * (x + 1)) - 1.0;
    const double fp = -2.0 / (x * x * x) - 2.0 / ((x + 1) * (x + 1) * (x + 1));
    x -= f / fp;
  }
  CHECK(c == doctest::Approx(x).epsilon(1e-8));
  CHECK(c == doctest::Approx(1.132).epsilon(1e-3));
}

TEST_CASE("find_constant on random PSD matrices") {
  Rng rng(47);
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 1 + static_cast<int>(rng.next_below(20));
    const int r = 1 + static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(p)));
    const Matrix z = random_psd(p, r, rng);
    const double alpha = 0.1 + 99.9 * rng.next_double();
    const EigenDecomp ze = sym_eig(Matrix(z));
    const double sp = std::sqrt(static_cast<double>(p));
    const double c = find_constant(ze, alpha, 1e-8 * std::max(1.0, sp));
    double tr = 0.0;
    for (int j = 0; j < p; ++j) {
      tr += 1.0 / std::pow(c + alpha * ze.eigenvalues(j), 2);
    }
    CHECK(std::abs(tr - 1.0) <= 1e-6);
    CHECK(c > -alpha * ze.eigenvalues(0));
    CHECK(c <= sp + 1e-12);
  }
}

TEST_CASE("player matrices") {
  const EigenDecomp id2{Vector::Constant(2, 1.0), Matrix::Identity(2, 2)};
  const double c = std::sqrt(2.0) - 2.0;
  const auto [a, a_sqrt] = player_matrices(id2, 2.0, c);
  CHECK((a.mat() - 0.5 * Matrix::Identity(2, 2)).norm() <= 1e-10);
  CHECK((a_sqrt.mat() - Matrix::Identity(2, 2) / std::sqrt(2.0)).norm() <=
        1e-10);
  CHECK(a.mat().trace() == doctest::Approx(1.0).epsilon(1e-6));

  const EigenDecomp z1{Vector::Constant(1, 0.25), Matrix::Identity(1, 1)};
  const auto [a1, s1] = player_matrices(z1, 1.0, 0.75);
  CHECK(a1.mat()(0, 0) == doctest::Approx(1.0));
  CHECK(s1.mat()(0, 0) == doctest::Approx(1.0));

  Rng rng(53);
  const Matrix z = random_psd(4, 4, rng);
  const EigenDecomp ze = sym_eig(Matrix(z));
  const double cz = find_constant(ze, 3.0, 1e-10);
  const auto [az, sz] = player_matrices(ze, 3.0, cz);
  CHECK((sz.mat() * sz.mat() - az.mat()).norm() <= 1e-8);

  CHECK_THROWS_AS(player_matrices(ze, 3.0, -100.0), singular_error);
}

TEST_CASE("select_swap worked scalar example") {
  RowMatrix x(2, 1);
  x << 0.5, 1.0;
  WhitenedPool w;
  w.points = x;
  w.transform = Matrix::Identity(1, 1);
  w.eligible = {1, 1};
  w.rank = 1;
  SwapState st;
  st.counts = {1, 0};
  st.z = Matrix::Constant(1, 1, 0.25);
  st.z_eig = sym_eig(st.z);
  st.alpha = 1.0;
  st.c = 0.75;
  const SwapChoice ch = select_swap(st, w, 1);
  REQUIRE(ch.status == SwapStatus::Swap);
  CHECK(ch.remove_idx == 0);
  CHECK(ch.insert_idx == 1);
  CHECK(ch.removal_score == doctest::Approx(0.5));
  CHECK(ch.insertion_score == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("select_swap ties break to the lowest indices") {
  RowMatrix x(4, 2);
  x << 1, 0, 1, 0, 1, 0, 1, 0;
  WhitenedPool w;
  w.points = x;
  w.transform = Matrix::Identity(2, 2);
  w.eligible = {1, 1, 1, 1};
  w.rank = 2;
  SwapState st;
  st.counts = {0, 1, 1, 0};
  st.z = 2.0 * x.row(0).transpose() * x.row(0);
  st.z_eig = sym_eig(st.z);
  st.alpha = 0.3;
  st.c = find_constant(st.z_eig, st.alpha, 1e-10);
  const SwapChoice ch = select_swap(st, w, 1);
  REQUIRE(ch.status == SwapStatus::Swap);
  CHECK(ch.remove_idx == 1);  // lowest selected index
  CHECK(ch.insert_idx == 0);  // lowest insertable index
}

TEST_CASE("select_swap matches brute force over pairs") {
  Rng rng(59);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 4 + static_cast<int>(rng.next_below(3));
    const int p = 2, k = 3, b = 1;
    const DesignPool pool = gaussian_pool(n, p, rng);
    const FractionalDesign pi = random_fraction(n, k, b, rng);
    const WhitenedPool w = whiten(pool, pi);
    SwapState st;
    st.counts.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < k; ++i) st.counts[static_cast<std::size_t>(i)] = 1;
    st.z = whitened_covariance(w, [&] {
      Vector v = Vector::Zero(n);
      for (int i = 0; i < k; ++i) v(i) = 1.0;
      return v;
    }());
    st.z_eig = sym_eig(st.z);
    st.alpha = 0.5 + rng.next_double();
    st.c = find_constant(st.z_eig, st.alpha, 1e-10);
    const SwapChoice ch = select_swap(st, w, b);
    if (ch.status != SwapStatus::Swap) continue;

    const auto [a, a_sqrt] = player_matrices(st.z_eig, st.alpha, st.c);
    int best_rm = -1, best_in = -1;
    double best_rm_score = 1e300, best_in_score = -1e300;
    for (int i = 0; i < n; ++i) {
      const Vector xi = w.points.row(i).transpose();
      const double q = xi.dot(a.mat() * xi);
      const double s = xi.dot(a_sqrt.mat() * xi);
      if (st.counts[static_cast<std::size_t>(i)] >= 1 &&
          2 * st.alpha * s < 1.0) {
        const double score = q / (1.0 - 2 * st.alpha * s);
        if (score < best_rm_score) {
          best_rm_score = score;
          best_rm = i;
        }
      }
      if (st.counts[static_cast<std::size_t>(i)] < b) {
        const double score = q / (1.0 + 2 * st.alpha * s);
        if (score > best_in_score) {
          best_in_score = score;
          best_in = i;
        }
      }
    }
    CHECK(ch.remove_idx == best_rm);
    CHECK(ch.insert_idx == best_in);
  }
}

TEST_CASE("round_design with n = k is a forced full selection") {
  Rng rng(61);
  const int n = 5, p = 2;
  const DesignPool pool = gaussian_pool(n, p, rng);
  const FractionalDesign pi = uniform_fraction(n, n, 1);
  const WhitenedPool w = whiten(pool, pi);
  const auto [design, diag] = round_design(w, pi, 0.2, RoundMode::Practical);
  for (int i = 0; i < n; ++i) CHECK(design.counts[i] == 1);
  CHECK(diag.final_lambda_min == doctest::Approx(1.0));
}

TEST_CASE("theory mode validates its preconditions") {
  Rng rng(67);
  const int n = 30, p = 2;
  const DesignPool pool = gaussian_pool(n, p, rng);
  const FractionalDesign pi = uniform_fraction(n, 10, 1);
  const WhitenedPool w = whiten(pool, pi);
  CHECK_THROWS_AS(round_design(w, pi, 0.5, RoundMode::Theory), config_error);
  // k = 10 < 5*2/0.25^2 = 160.
  CHECK_THROWS_AS(round_design(w, pi, 0.25, RoundMode::Theory), config_error);
}

TEST_CASE("theory mode reaches the eigenvalue target with certificates") {
  Rng rng(71);
  const int n = 120, p = 1, k = 60;
  const double eps = 0.3;  // k >= 5p/eps^2 = 55.6
  const DesignPool pool = gaussian_pool(n, p, rng);
  MdConfig cfg;
  cfg.iterations = 300;
  const RelaxResult relax =
      solve_relaxation(make_criterion(CriterionKind::A), pool, k, 1, cfg);
  const WhitenedPool w = whiten(pool, relax.design);
  const auto [design, diag] = round_design(w, relax.design, eps,
                                           RoundMode::Theory);
  CHECK(design.total() == k);
  CHECK(diag.final_lambda_min >= 1.0 - 3.0 * eps);
  CHECK(diag.regret_slack >= -1e-6 * std::max<double>(1.0,
        static_cast<double>(diag.iterations.size())));
  const double sp = std::sqrt(static_cast<double>(diag.rank));
  for (const SwapRecord& r : diag.iterations) {
    CHECK(r.half_potential <= diag.rank + diag.alpha * sp + 1e-6);
    CHECK(r.full_potential <= sp / diag.alpha + r.lambda_min + 1e-6);
    CHECK(r.insertion_score - r.removal_score >= eps / k - 1e-9);
  }
}

TEST_CASE("regret certificate on an empty trace and sensitivity") {
  Rng rng(73);
  const Matrix z = testutil::random_spd(3, rng);
  RunDiagnostics diag;
  diag.rank = 3;
  const CertificateReport rep =
      regret_certificate(diag, SymMatrix(z), {}, 2.0);
  CHECK(rep.ok);
  CHECK(rep.lhs == doctest::Approx(-sym_eig(Matrix(z)).eigenvalues(0)));

  // A tampered score breaks the bound.
  RunDiagnostics bad;
  bad.rank = 3;
  SwapRecord r;
  r.removal_score = -sym_eig(Matrix(z)).eigenvalues(0) - 10.0;
  r.insertion_score = 0.0;
  bad.iterations.push_back(r);
  CHECK_FALSE(regret_certificate(bad, SymMatrix(z), {}, 1e6).ok);
}

TEST_CASE("practical mode returns a feasible design with the best run") {
  Rng rng(79);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 12, p = 2, k = 5;
    const DesignPool pool = gaussian_pool(n, p, rng);
    const FractionalDesign pi = random_fraction(n, k, 1, rng);
    const WhitenedPool w = whiten(pool, pi);
    const auto [design, diag] = round_design(w, pi, 0.1, RoundMode::Practical);
    CHECK(design.total() == k);
    for (int c : design.counts) {
      CHECK(c >= 0);
      CHECK(c <= 1);
    }
    CHECK(diag.final_lambda_min >= 0.0);
  }
}

TEST_CASE("multiplicity handled logically matches physical duplication") {
  Rng rng(83);
  for (int b : {2, 3}) {
    const int p = 1;
    const double eps = 0.3;
    const int k = 56;  // >= 5p/eps^2
    const int n = (b == 2) ? 30 : 20;
    const DesignPool pool = gaussian_pool(n, p, rng);
    const FractionalDesign pi = random_fraction(n, k, b, rng);

    const WhitenedPool w = whiten(pool, pi);
    const auto [logical, diag1] = round_design(w, pi, eps, RoundMode::Theory);

    RowMatrix dup(n * b, p);
    Vector dup_weights(n * b);
    for (int i = 0; i < n; ++i) {
      for (int copy = 0; copy < b; ++copy) {
        dup.row(i * b + copy) = pool.points().row(i);
        dup_weights(i * b + copy) = pi.weights(i) / b;
      }
    }
    const DesignPool dpool(dup);
    FractionalDesign dpi;
    dpi.weights = dup_weights;
    dpi.k = k;
    dpi.b = 1;
    const WhitenedPool dw = whiten(dpool, dpi);
    const auto [physical, diag2] =
        round_design(dw, dpi, eps, RoundMode::Theory);

    std::vector<int> aggregated(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n * b; ++i) {
      aggregated[static_cast<std::size_t>(i / b)] += physical.counts[i];
    }
    CHECK(aggregated == logical.counts);
    const double f1 = eval(make_criterion(CriterionKind::A),
                           pool.weighted_covariance(logical.counts_vector()),
                           &pool);
    const double f2 = eval(
        make_criterion(CriterionKind::A),
        dpool.weighted_covariance(physical.counts_vector()), &dpool);
    CHECK(f1 == doctest::Approx(f2).epsilon(1e-9));
  }
}

TEST_CASE("select short-circuits the trace criterion") {
  Rng rng(89);
  const DesignPool pool = gaussian_pool(8, 2, rng);
  const Criterion c = make_criterion(CriterionKind::T);
  const auto [design, rep] =
      select(pool, c, 3, 1, 0.2, RoundMode::Practical);
  CHECK(rep.ratio == doctest::Approx(1.0));
  const IntegralDesign exact = brute_force(pool, c, 3, 1);
  CHECK(eval(c, pool.weighted_covariance(design.counts_vector()), &pool) ==
        doctest::Approx(eval(
            c, pool.weighted_covariance(exact.counts_vector()), &pool)));
}

TEST_CASE("select with n = k returns the full pool") {
  Rng rng(97);
  const DesignPool pool = gaussian_pool(6, 2, rng);
  const auto [design, rep] = select(pool, make_criterion(CriterionKind::A), 6,
                                    1, 0.2, RoundMode::Practical);
  for (int c : design.counts) CHECK(c == 1);
  const Matrix gram = pool.points().transpose() * pool.points();
  CHECK(rep.objective ==
        doctest::Approx(eval(make_criterion(CriterionKind::A), gram, &pool)));
}

TEST_CASE("diagnostics export as CSV") {
  RunDiagnostics diag;
  SwapRecord r;
  r.iteration = 1;
  r.lambda_min = 0.5;
  r.removal_score = 0.25;
  r.insertion_score = 0.5;
  r.c = 0.75;
  diag.iterations.push_back(r);
  const std::string csv = diagnostics_csv(diag);
  CHECK(csv.find("iteration,lambda_min,removal_score,insertion_score,c") !=
        std::string::npos);
  CHECK(csv.find("\n1,0.5,0.25,0.5,0.75") != std::string::npos);
}
