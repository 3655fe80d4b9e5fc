#include "oed/design.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "oed/kernels.hpp"

namespace oed {

DesignPool::DesignPool(RowMatrix points) : X_(std::move(points)) {
  if (X_.rows() == 0 || X_.cols() == 0) {
    throw input_error("DesignPool: empty pool");
  }
  if (!X_.allFinite()) {
    throw input_error("DesignPool: non-finite design point");
  }
}

Matrix DesignPool::weighted_covariance(const Vector& w) const {
  if (w.size() != n()) {
    throw input_error("weighted_covariance: weight length mismatch");
  }
  RowMatrix s = RowMatrix::Zero(p(), p());
  kernels::weighted_gram(X_.data(), static_cast<std::size_t>(n()),
                         static_cast<std::size_t>(p()), w.data(), s.data());
  Matrix out = s;
  return 0.5 * (out + out.transpose());
}

Vector DesignPool::quad_forms(const Matrix& a) const {
  if (a.rows() != p() || a.cols() != p()) {
    throw input_error("quad_forms: matrix dimension mismatch");
  }
  RowMatrix ar = a;
  Vector out(n());
  kernels::quad_forms(X_.data(), static_cast<std::size_t>(n()),
                      static_cast<std::size_t>(p()), ar.data(), out.data());
  return out;
}

namespace {

std::vector<double> parse_csv_line(const std::string& line, bool& numeric) {
  std::vector<double> vals;
  numeric = true;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(cell, &pos);
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
      if (pos != cell.size()) {
        numeric = false;
        return {};
      }
      vals.push_back(v);
    } catch (const std::exception&) {
      numeric = false;
      return {};
    }
  }
  return vals;
}

}  // namespace

DesignPool load_pool_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open pool file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool numeric = false;
    auto vals = parse_csv_line(line, numeric);
    if (!numeric) {
      if (first) {  // header line auto-detected
        first = false;
        continue;
      }
      throw input_error("pool CSV: non-numeric row in " + path);
    }
    first = false;
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw input_error("pool CSV: inconsistent column count in " + path);
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw input_error("pool CSV: no data rows in " + path);
  RowMatrix X(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return DesignPool(std::move(X));
}

void save_pool_csv(const DesignPool& pool, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write pool file: " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < pool.n(); ++i) {
    for (Eigen::Index j = 0; j < pool.p(); ++j) {
      if (j) out << ',';
      out << pool.points()(i, j);
    }
    out << '\n';
  }
}

PoolStats compute_pool_stats(const DesignPool& pool) {
  const auto n = pool.n();
  Vector uniform = Vector::Constant(n, 1.0 / static_cast<double>(n));
  EigenDecomp eig = sym_eig(pool.weighted_covariance(uniform));
  PoolStats st;
  st.sigma_lo = std::max(0.0, eig.eigenvalues(0));
  st.sigma_hi = eig.eigenvalues(eig.dim() - 1);
  st.max_norm = pool.points().rowwise().norm().maxCoeff();
  st.dim = static_cast<int>(pool.p());
  return st;
}

void FractionalDesign::validate() const {
  if (k <= 0 || b <= 0) throw input_error("FractionalDesign: k and b must be positive");
  if (!weights.allFinite()) throw input_error("FractionalDesign: non-finite weight");
  const double bb = static_cast<double>(b);
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) < -1e-9 || weights(i) > bb + 1e-9) {
      throw input_error("FractionalDesign: weight outside [0, b]");
    }
  }
  if (weights.sum() > static_cast<double>(k) + 1e-9) {
    throw input_error("FractionalDesign: weights exceed budget k");
  }
}

void IntegralDesign::validate() const {
  if (k <= 0 || b <= 0) throw input_error("IntegralDesign: k and b must be positive");
  int sum = 0;
  for (int c : counts) {
    if (c < 0 || c > b) throw input_error("IntegralDesign: count outside {0..b}");
    sum += c;
  }
  if (sum > k) throw input_error("IntegralDesign: counts exceed budget k");
}

int IntegralDesign::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

Vector IntegralDesign::counts_vector() const {
  Vector v(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = counts[i];
  }
  return v;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw input_error("Rng::next_below: zero bound");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_gaussian_;
  }
  double u1, u2;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_gaussian_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

}  // namespace oed
