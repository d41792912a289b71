#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twlasso/numerics.hpp"

namespace twlasso {

/// K unit folds (random) x L contiguous time folds. Indices are 0-based;
/// fold k / l in the API are 0-based as well.
struct CrossFitPlan {
  int K = 0;
  int L = 0;
  std::uint64_t seed = 0;
  Index n_units = 0;
  Index n_periods = 0;
  std::vector<std::vector<Index>> unit_folds;  // ascending within fold
  std::vector<std::vector<Index>> time_folds;  // contiguous, S_0 earliest
};

/// Requires 1 <= K <= N and 4 <= L <= T. Fold sizes differ by at most one,
/// larger folds first.
CrossFitPlan make_plan(Index n_units, Index n_periods, int K, int L, std::uint64_t seed);

/// Cartesian product units x periods, both ascending.
struct SampleIndex {
  std::vector<Index> units;
  std::vector<Index> periods;

  Index size() const { return static_cast<Index>(units.size() * periods.size()); }
  /// Panel-order row indices (i * T + t) of the cells.
  std::vector<Index> rows(Index n_periods) const;
};

/// I_k x S_l.
SampleIndex main_sample(const CrossFitPlan& plan, int k, int l);
/// Units outside I_k crossed with periods outside S_{l-1}, S_l, S_{l+1}
/// (no wraparound at the ends). Throws StructuralError when empty.
SampleIndex auxiliary_sample(const CrossFitPlan& plan, int k, int l);

/// Fold membership as JSON text: {"K":..,"L":..,"seed":..,"unit_folds":[..],"time_folds":[..]}.
std::string plan_to_json(const CrossFitPlan& plan);

}  // namespace twlasso
