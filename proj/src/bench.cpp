#include "oed/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "oed/baselines.hpp"
#include "oed/rounding.hpp"

namespace oed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

Matrix spectrum_block(int rows, int cols, double scale, double decay_power,
                      Rng& rng) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g(i, j) = rng.next_gaussian();
  }
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector sv(cols);
  for (int j = 0; j < cols; ++j) {
    // Gram eigenvalue scale * (j+1)^-decay_power => singular value sqrt.
    sv(j) = std::sqrt(scale * std::pow(static_cast<double>(j + 1),
                                       -decay_power));
  }
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace

void SyntheticSpec::validate() const {
  if (p < 2 || n < p) throw input_error("SyntheticSpec: need n >= p >= 2");
  if (n % 2 != 0 || p % 2 != 0) {
    throw input_error("SyntheticSpec: n and p must be even");
  }
}

DesignPool gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const double scale =
      spec.top_eig_scale > 0.0 ? spec.top_eig_scale : spec.n / 2.0;
  Rng rng(spec.seed);
  const int hn = spec.n / 2;
  const int hp = spec.p / 2;
  const Matrix a = spectrum_block(hn, hp, scale, 2.0, rng);
  const Matrix b = spectrum_block(hn, hp, scale, 1.0, rng);
  RowMatrix x = RowMatrix::Zero(spec.n, spec.p);
  x.topLeftCorner(hn, hp) = a;
  x.bottomRightCorner(hn, hp) = b;
  return DesignPool(std::move(x));
}

namespace {

struct Cell {
  int pool_idx;
  int crit_idx;
  int k;
};

std::vector<BenchRow> run_cell(const DesignPool& pool, const Criterion& c,
                               int k, const std::vector<std::string>& methods,
                               const std::vector<std::uint64_t>& seeds) {
  const int n = static_cast<int>(pool.n());
  const int p = static_cast<int>(pool.p());
  const std::string letter = criterion_letter(c.kind);

  const bool needs_relax =
      std::find(methods.begin(), methods.end(), "WEIGHTED") != methods.end() ||
      std::find(methods.begin(), methods.end(), "SWAPPING") != methods.end();
  double relax_time = 0.0;
  FractionalDesign pi;
  if (needs_relax) {
    const double t0 = now_seconds();
    pi = solve_relaxation(c, pool, k, 1, MdConfig{}).design;
    relax_time = now_seconds() - t0;
  }

  // SWAPPING and GREEDY are deterministic given the pool, so run them once
  // and reuse the row across seeds.
  std::map<std::string, BenchRow> cached;
  std::vector<BenchRow> rows;
  for (const std::string& method : methods) {
    for (std::uint64_t seed : seeds) {
      BenchRow row{method, letter, n, p, k, 0.0, 0.0, seed};
      const bool deterministic = method == "SWAPPING" || method == "GREEDY";
      if (deterministic && cached.count(method)) {
        row.objective = cached[method].objective;
        row.runtime_s = cached[method].runtime_s;
        rows.push_back(std::move(row));
        continue;
      }
      const double t0 = now_seconds();
      try {
        Rng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(k));
        IntegralDesign d;
        if (method == "UNIFORM") {
          d = uniform_select(pool, c, k, 10, rng);
        } else if (method == "WEIGHTED") {
          d = weighted_select(pool, c, pi, k, 10, rng).design;
        } else if (method == "FEDOROV") {
          d = fedorov_exchange(pool, c, k, 1000, rng);
        } else if (method == "GREEDY") {
          d = greedy_removal(pool, c, k);
        } else if (method == "SWAPPING") {
          const WhitenedPool wpool = whiten(pool, pi);
          d = round_design(wpool, pi, 0.1, RoundMode::Practical).first;
        } else {
          throw input_error("run_bench: unknown method " + method);
        }
        row.objective =
            eval(c, pool.weighted_covariance(d.counts_vector()), &pool);
      } catch (const std::exception&) {
        row.objective = std::numeric_limits<double>::quiet_NaN();
      }
      row.runtime_s = now_seconds() - t0;
      if (method == "WEIGHTED" || method == "SWAPPING") {
        row.runtime_s += relax_time;
      }
      if (deterministic) cached[method] = row;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<BenchRow> run_bench(const std::vector<DesignPool>& pools,
                                const std::vector<Criterion>& criteria,
                                const std::vector<int>& k_values,
                                const std::vector<std::string>& methods,
                                const std::vector<std::uint64_t>& seeds) {
  for (const std::string& m : methods) {
    if (m != "UNIFORM" && m != "WEIGHTED" && m != "FEDOROV" && m != "GREEDY" &&
        m != "SWAPPING") {
      throw input_error("run_bench: unknown method " + m);
    }
  }
  std::vector<Cell> cells;
  for (int pi = 0; pi < static_cast<int>(pools.size()); ++pi) {
    for (int ci = 0; ci < static_cast<int>(criteria.size()); ++ci) {
      for (int k : k_values) cells.push_back(Cell{pi, ci, k});
    }
  }

  int width = 1;
  if (const char* env = std::getenv("OED_BENCH_PARALLEL")) {
    width = std::max(1, std::atoi(env));
  }

  std::vector<std::vector<BenchRow>> per_cell(cells.size());
  if (width == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const Cell& cell = cells[i];
      per_cell[i] = run_cell(pools[cell.pool_idx], criteria[cell.crit_idx],
                             cell.k, methods, seeds);
    }
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < width; ++w) {
      futs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          const Cell& cell = cells[i];
          per_cell[i] = run_cell(pools[cell.pool_idx],
                                 criteria[cell.crit_idx], cell.k, methods,
                                 seeds);
        }
      }));
    }
    for (auto& f : futs) f.get();
  }

  std::vector<BenchRow> rows;
  for (auto& cell_rows : per_cell) {
    for (auto& r : cell_rows) rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

std::string objective_str(double v) {
  if (std::isnan(v)) return "Error";
  if (std::isinf(v)) return "Inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_objective(const std::string& s) {
  if (s == "Error") return std::numeric_limits<double>::quiet_NaN();
  if (s == "Inf") return kInf;
  return std::stod(s);
}

}  // namespace

std::string emit_table(const std::vector<BenchRow>& rows, TableFormat format) {
  if (rows.empty()) throw input_error("emit_table: no rows");
  std::ostringstream os;
  if (format == TableFormat::Csv) {
    os << "method,criterion,n,p,k,objective,runtime_s,seed\n";
    os.precision(17);
    for (const BenchRow& r : rows) {
      os << r.method << ',' << r.criterion << ',' << r.n << ',' << r.p << ','
         << r.k << ',' << objective_str(r.objective) << ',' << r.runtime_s
         << ',' << r.seed << '\n';
    }
    return os.str();
  }

  // Markdown: one table per k, methods as rows, criteria as columns, the
  // runtime in brackets.  Cells with several seeds show the median objective
  // and total runtime.
  std::vector<int> ks;
  std::vector<std::string> methods, crits;
  for (const BenchRow& r : rows) {
    if (std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
    if (std::find(crits.begin(), crits.end(), r.criterion) == crits.end()) {
      crits.push_back(r.criterion);
    }
  }
  os.precision(4);
  for (int k : ks) {
    os << "## k = " << k << "\n\n| method |";
    for (const auto& cr : crits) os << ' ' << cr << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < crits.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& m : methods) {
      os << "| " << m << " |";
      for (const auto& cr : crits) {
        std::vector<double> objs;
        double time = 0.0;
        for (const BenchRow& r : rows) {
          if (r.k == k && r.method == m && r.criterion == cr) {
            objs.push_back(r.objective);
            time += r.runtime_s;
          }
        }
        if (objs.empty()) {
          os << " - |";
          continue;
        }
        std::sort(objs.begin(), objs.end());
        const std::size_t mid = objs.size() / 2;
        const double med = objs.size() % 2
                               ? objs[mid]
                               : 0.5 * (objs[mid - 1] + objs[mid]);
        os << ' ' << objective_str(med) << " (" << time << ") |";
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

std::vector<BenchRow> parse_table_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) ||
      line != "method,criterion,n,p,k,objective,runtime_s,seed") {
    throw input_error("parse_table_csv: bad header");
  }
  std::vector<BenchRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    BenchRow r;
    std::getline(ls, r.method, ',');
    std::getline(ls, r.criterion, ',');
    std::getline(ls, field, ',');
    r.n = std::stoi(field);
    std::getline(ls, field, ',');
    r.p = std::stoi(field);
    std::getline(ls, field, ',');
    r.k = std::stoi(field);
    std::getline(ls, field, ',');
    r.objective = parse_objective(field);
    std::getline(ls, field, ',');
    r.runtime_s = std::stod(field);
    std::getline(ls, field, ',');
    r.seed = std::stoull(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace oed
