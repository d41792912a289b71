#include "twlasso/crossfit.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "twlasso/errors.hpp"

namespace twlasso {

namespace {

std::vector<Index> fold_sizes(Index n, int folds) {
  std::vector<Index> sizes(folds, n / folds);
  for (Index r = 0; r < n % folds; ++r) ++sizes[r];
  return sizes;
}

void check_fold(const CrossFitPlan& plan, int k, int l) {
  if (k < 0 || k >= plan.K || l < 0 || l >= plan.L) {
    throw DomainError("cross-fitting fold index out of range");
  }
}

}  // namespace

CrossFitPlan make_plan(Index n_units, Index n_periods, int K, int L, std::uint64_t seed) {
  if (L < 4) {
    throw ConfigError("cross-fitting needs L >= 4 time folds: with fewer, a middle fold has no "
                      "auxiliary periods once its neighbours are excluded");
  }
  if (K < 1 || K > n_units) throw DomainError("cross-fitting needs 1 <= K <= N");
  if (L > n_periods) throw DomainError("cross-fitting needs L <= T");

  CrossFitPlan plan;
  plan.K = K;
  plan.L = L;
  plan.seed = seed;
  plan.n_units = n_units;
  plan.n_periods = n_periods;

  std::vector<Index> perm(n_units);
  std::iota(perm.begin(), perm.end(), Index{0});
  RngStream rng(seed, 0x5eedf01dULL);
  for (Index i = n_units - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  Index offset = 0;
  for (Index size : fold_sizes(n_units, K)) {
    std::vector<Index> fold(perm.begin() + offset, perm.begin() + offset + size);
    std::sort(fold.begin(), fold.end());
    plan.unit_folds.push_back(std::move(fold));
    offset += size;
  }
  offset = 0;
  for (Index size : fold_sizes(n_periods, L)) {
    std::vector<Index> fold(size);
    std::iota(fold.begin(), fold.end(), offset);
    plan.time_folds.push_back(std::move(fold));
    offset += size;
  }
  return plan;
}

std::vector<Index> SampleIndex::rows(Index n_periods) const {
  std::vector<Index> out;
  out.reserve(units.size() * periods.size());
  for (Index i : units) {
    for (Index t : periods) out.push_back(i * n_periods + t);
  }
  return out;
}

SampleIndex main_sample(const CrossFitPlan& plan, int k, int l) {
  check_fold(plan, k, l);
  return {plan.unit_folds[k], plan.time_folds[l]};
}

SampleIndex auxiliary_sample(const CrossFitPlan& plan, int k, int l) {
  check_fold(plan, k, l);
  SampleIndex s;
  for (int kk = 0; kk < plan.K; ++kk) {
    if (kk == k) continue;
    s.units.insert(s.units.end(), plan.unit_folds[kk].begin(), plan.unit_folds[kk].end());
  }
  for (int ll = 0; ll < plan.L; ++ll) {
    if (ll >= l - 1 && ll <= l + 1) continue;
    s.periods.insert(s.periods.end(), plan.time_folds[ll].begin(), plan.time_folds[ll].end());
  }
  std::sort(s.units.begin(), s.units.end());
  if (s.units.empty() || s.periods.empty()) {
    throw StructuralError("auxiliary sample for fold (" + std::to_string(k + 1) + ", " +
                          std::to_string(l + 1) + ") is empty; need K >= 2 and L >= 4");
  }
  return s;
}

std::string plan_to_json(const CrossFitPlan& plan) {
  nlohmann::json j;
  j["K"] = plan.K;
  j["L"] = plan.L;
  j["seed"] = plan.seed;
  j["n_units"] = plan.n_units;
  j["n_periods"] = plan.n_periods;
  j["unit_folds"] = plan.unit_folds;
  j["time_folds"] = plan.time_folds;
  return j.dump();
}

}  // namespace twlasso
