#pragma once

#include "oed/criteria.hpp"
#include "oed/design.hpp"

namespace oed {

/// Best of `repeats` uniform k-subsets (without replacement) under eval.
IntegralDesign uniform_select(const DesignPool& pool, const Criterion& c,
                              int k, int repeats, Rng& rng);

struct WeightedSelectResult {
  IntegralDesign design;
  bool uniform_fallback = false;  // pi* support exhausted before k draws
};

/// Best of `repeats` draws of k indices without replacement, each draw
/// proportional to the remaining pi* mass.
WeightedSelectResult weighted_select(const DesignPool& pool,
                                     const Criterion& c,
                                     const FractionalDesign& pi_star, int k,
                                     int repeats, Rng& rng);

/// Exchange local search from a random k-subset: each change applies the
/// (i in S, j not in S) swap minimizing the objective over all pairs.
/// `fast_updates` switches the A/D/V criteria to rank-1 inverse maintenance;
/// other criteria always recompute.
IntegralDesign fedorov_exchange(const DesignPool& pool, const Criterion& c,
                                int k, int max_changes, Rng& rng,
                                bool fast_updates = false);

/// Start from the full pool and drop the objective-minimizing point n-k
/// times.  Ties go to the lowest index; removals that make the objective
/// infinite rank last.
IntegralDesign greedy_removal(const DesignPool& pool, const Criterion& c,
                              int k);

/// Exact minimizer over count vectors with 0 <= s_i <= b and sum s_i = k by
/// exhaustive enumeration.  Refuses when the state count exceeds 1e6.
IntegralDesign brute_force(const DesignPool& pool, const Criterion& c, int k,
                           int b);

}  // namespace oed
