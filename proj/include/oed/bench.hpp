#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oed/criteria.hpp"
#include "oed/design.hpp"

namespace oed {

/// Block-diagonal synthetic pool [X_A 0; 0 X_B]: each block is an
/// (n/2) x (p/2) Gaussian draw whose spectrum is replaced so the block Gram
/// eigenvalues decay as top_eig_scale * j^-2 (A) and * j^-1 (B).
struct SyntheticSpec {
  int n = 0;               // even, >= p
  int p = 0;               // even, >= 2
  std::uint64_t seed = 0;
  double top_eig_scale = 0.0;  // <= 0 means the default n/2

  void validate() const;
};

DesignPool gen_synthetic(const SyntheticSpec& spec);

struct BenchRow {
  std::string method;
  std::string criterion;
  int n = 0;
  int p = 0;
  int k = 0;
  double objective = 0.0;  // +inf allowed; NaN marks a failed cell
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
};

/// One row per (pool, criterion, k, method, seed), assembled in grid order.
/// Methods: UNIFORM, WEIGHTED, FEDOROV, GREEDY, SWAPPING; the WEIGHTED and
/// SWAPPING runtimes include the shared relaxation solve.  Parallel width is
/// read from OED_BENCH_PARALLEL (default 1).
std::vector<BenchRow> run_bench(const std::vector<DesignPool>& pools,
                                const std::vector<Criterion>& criteria,
                                const std::vector<int>& k_values,
                                const std::vector<std::string>& methods,
                                const std::vector<std::uint64_t>& seeds);

enum class TableFormat { Csv, Markdown };

std::string emit_table(const std::vector<BenchRow>& rows, TableFormat format);

/// Inverse of emit_table for the CSV format.
std::vector<BenchRow> parse_table_csv(const std::string& text);

}  // namespace oed
