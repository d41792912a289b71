#pragma once

#include <vector>

#include <Eigen/Dense>

#include "twlasso/panel.hpp"

namespace twlasso {

struct MundlakAverages {
  Eigen::MatrixXd unit_means;    // N x (1+p): treatment then covariates
  Eigen::MatrixXd period_means;  // T x (1+p)
};

MundlakAverages mundlak_averages(const PanelDataset& data);

struct DictionaryOptions {
  Index max_columns = 10000;
  /// Center and scale every input to unit sample SD before expansion.
  bool standardize = true;
};

struct Dictionary {
  FeatureMatrix features;  // monomials then the intercept column last
  int order = 1;
  std::vector<std::string> input_names;
  /// Exponents over the inputs for every non-intercept column.
  std::vector<std::vector<int>> term_index;
  /// Inputs left out because they are constant over the sample.
  std::vector<std::string> dropped_inputs;
};

/// All monomials of degree 1..order over the inputs (X_it, Fbar_i, Fbar_t),
/// degree-lexicographic, followed by an intercept column.
Dictionary build_dictionary(const PanelDataset& data, int order,
                            const DictionaryOptions& options = {});

/// Exponent vectors of all monomials of degree 1..order over k inputs, in
/// the dictionary column order.
std::vector<std::vector<int>> monomial_exponents(Index k, int order);

/// Number of non-intercept terms, C(k + order, order) - 1.
Index dictionary_term_count(Index k, int order);

}  // namespace twlasso
