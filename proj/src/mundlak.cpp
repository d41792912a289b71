#include "twlasso/mundlak.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "twlasso/errors.hpp"

namespace twlasso {

MundlakAverages mundlak_averages(const PanelDataset& data) {
  const Index p = data.n_covariates();
  MundlakAverages out;
  out.unit_means.resize(data.n_units, 1 + p);
  out.period_means.resize(data.n_periods, 1 + p);
  out.unit_means.col(0) = data.treatment.rowwise().mean();
  out.period_means.col(0) = data.treatment.colwise().mean().transpose();
  for (Index j = 0; j < p; ++j) {
    out.unit_means.col(1 + j) = data.covariates[j].rowwise().mean();
    out.period_means.col(1 + j) = data.covariates[j].colwise().mean().transpose();
  }
  return out;
}

std::vector<std::vector<int>> monomial_exponents(Index k, int order) {
  std::vector<std::vector<int>> terms;
  std::vector<Index> idx;
  std::function<void(Index, int)> rec = [&](Index start, int remaining) {
    if (remaining == 0) {
      std::vector<int> e(k, 0);
      for (Index i : idx) ++e[i];
      terms.push_back(std::move(e));
      return;
    }
    for (Index i = start; i < k; ++i) {
      idx.push_back(i);
      rec(i, remaining - 1);
      idx.pop_back();
    }
  };
  for (int d = 1; d <= order; ++d) rec(0, d);
  return terms;
}

Index dictionary_term_count(Index k, int order) {
  // C(k + order, order) - 1, exact in integers for the small orders used here
  Index c = 1;
  for (int r = 1; r <= order; ++r) c = c * (k + r) / r;
  return c - 1;
}

namespace {

std::string monomial_name(const std::vector<int>& e, const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += '*';
    s += names[i];
    if (e[i] > 1) s += '^' + std::to_string(e[i]);
  }
  return s;
}

}  // namespace

Dictionary build_dictionary(const PanelDataset& data, int order, const DictionaryOptions& options) {
  if (order < 1 || order > 3) throw DomainError("dictionary order must be 1, 2 or 3");
  data.validate();
  const Index n = data.n_units;
  const Index t_count = data.n_periods;
  const Index p = data.n_covariates();
  Index k = p + 2 * (1 + p);
  Index n_terms = dictionary_term_count(k, order);
  if (n_terms + 1 > options.max_columns) {
    throw SizeError("dictionary would have " + std::to_string(n_terms + 1) +
                    " columns, above the cap of " + std::to_string(options.max_columns));
  }

  const MundlakAverages avg = mundlak_averages(data);
  Dictionary dict;
  dict.order = order;
  Eigen::MatrixXd inputs(n * t_count, k);
  for (Index j = 0; j < p; ++j) {
    inputs.col(j) = to_panel_vector(data.covariates[j]);
    dict.input_names.push_back(j < static_cast<Index>(data.covariate_names.size())
                                   ? data.covariate_names[j]
                                   : "x" + std::to_string(j + 1));
  }
  for (Index j = 0; j <= p; ++j) {
    for (Index i = 0; i < n; ++i) {
      inputs.block(i * t_count, p + j, t_count, 1).setConstant(avg.unit_means(i, j));
      inputs.block(i * t_count, p + 1 + p + j, t_count, 1) = avg.period_means.col(j);
    }
  }
  for (Index j = 0; j <= p; ++j) dict.input_names.push_back("fbar_i" + std::to_string(j + 1));
  for (Index j = 0; j <= p; ++j) dict.input_names.push_back("fbar_t" + std::to_string(j + 1));

  std::vector<Index> kept;
  for (Index j = 0; j < k; ++j) {
    const double mean = inputs.col(j).mean();
    const double sd =
        std::sqrt((inputs.col(j).array() - mean).square().sum() / (inputs.rows() - 1.0));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      dict.dropped_inputs.push_back(dict.input_names[j]);
      continue;
    }
    if (options.standardize) inputs.col(j) = (inputs.col(j).array() - mean) / sd;
    kept.push_back(j);
  }
  if (!dict.dropped_inputs.empty()) {
    Eigen::MatrixXd reduced(inputs.rows(), static_cast<Index>(kept.size()));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kept.size(); ++c) {
      reduced.col(static_cast<Index>(c)) = inputs.col(kept[c]);
      names.push_back(dict.input_names[kept[c]]);
    }
    inputs = std::move(reduced);
    dict.input_names = std::move(names);
    k = inputs.cols();
    if (k == 0) throw InputError("dictionary: every input is constant");
    n_terms = dictionary_term_count(k, order);
  }

  dict.term_index = monomial_exponents(k, order);
  FeatureMatrix& f = dict.features;
  f.n_units = n;
  f.n_periods = t_count;
  f.values.resize(n * t_count, n_terms + 1);
  for (Index c = 0; c < n_terms; ++c) {
    const auto& e = dict.term_index[c];
    Eigen::VectorXd col = Eigen::VectorXd::Ones(n * t_count);
    for (Index j = 0; j < k; ++j) {
      for (int r = 0; r < e[j]; ++r) col.array() *= inputs.col(j).array();
    }
    f.values.col(c) = col;
    f.column_names.push_back(monomial_name(e, dict.input_names));
  }
  f.values.col(n_terms).setOnes();
  f.column_names.push_back("intercept");
  f.intercept_column = n_terms;
  return dict;
}

}  // namespace twlasso
