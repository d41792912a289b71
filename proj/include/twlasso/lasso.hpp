#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "twlasso/panel.hpp"

namespace twlasso {

struct LassoOptions {
  /// Stop when the largest coefficient change in a full sweep is below tol.
  double tol = 1e-7;
  int max_iter = 10000;
  /// When set, receives the objective value after every sweep.
  std::vector<double>* objective_trace = nullptr;
};

struct LassoFit {
  Eigen::VectorXd coefficients;  // p, zero on the intercept column
  double intercept = 0.0;
  std::vector<Index> selected;   // nonzero support, ascending
  Eigen::VectorXd residuals;     // y - intercept - F * coefficients
  double objective_value = 0.0;
  int n_iterations = 0;
  bool converged = true;
  bool rank_deficient = false;   // post-LASSO only
  double lambda = 0.0;
};

/// Centered second moments of a design. `gram` holds F_c' F_c where F_c is
/// the column-demeaned design; `means` holds the column means.
struct GramSystem {
  Index n = 0;
  Eigen::VectorXd means;
  Eigen::MatrixXd gram;
  std::optional<Index> intercept_column;

  Index cols() const { return gram.cols(); }

  static GramSystem from_design(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                std::optional<Index> intercept_column = std::nullopt);
  /// Builds the centered system from uncentered sums: sum of rows (n),
  /// column sums and the raw cross-product matrix.
  static GramSystem from_raw_sums(Index n, const Eigen::VectorXd& column_sums,
                                  const Eigen::MatrixXd& raw_cross,
                                  std::optional<Index> intercept_column = std::nullopt);
};

/// Centered response statistics relative to a GramSystem.
struct GramResponse {
  double mean = 0.0;
  Eigen::VectorXd cross;  // F_c' y_c
  double ss = 0.0;        // y_c' y_c
};

GramResponse make_response(const Eigen::Ref<const Eigen::MatrixXd>& design, const GramSystem& sys,
                           const Eigen::Ref<const Eigen::VectorXd>& response);

struct GramSolution {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  int n_iterations = 0;
  bool converged = true;
  bool rank_deficient = false;
};

/// Cyclic coordinate descent with covariance updates on
///   (1/n) ||y_c - F_c b||^2 + (lambda/n) sum_j w_j |b_j|.
/// The intercept is recovered as mean(y) - means' b.
GramSolution solve_lasso_gram(const GramSystem& sys, const GramResponse& resp, double lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& weights,
                              const LassoOptions& opts = {});

/// OLS of the centered response on the columns in `selected`.
GramSolution solve_ols_gram(const GramSystem& sys, const GramResponse& resp,
                            const std::vector<Index>& selected);

/// Objective value from Gram statistics.
double gram_objective(const GramSystem& sys, const GramResponse& resp,
                      const Eigen::VectorXd& coefficients, double lambda,
                      const Eigen::Ref<const Eigen::VectorXd>& weights);

/// Nonzero support after zeroing |b_j| < 1e-12.
std::vector<Index> support_of(Eigen::VectorXd& coefficients);

/// Weighted LASSO with an unpenalized intercept.
LassoFit solve_weighted_lasso(const FeatureMatrix& features,
                              const Eigen::Ref<const Eigen::VectorXd>& response, double lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& weights, double tol = 1e-7,
                              int max_iter = 10000, std::vector<double>* objective_trace = nullptr);

/// OLS on intercept + selected columns. Rank-deficient selections get the
/// minimum-norm solution and rank_deficient = true.
LassoFit post_lasso(const FeatureMatrix& features,
                    const Eigen::Ref<const Eigen::VectorXd>& response,
                    const std::vector<Index>& selected);

/// Largest violation of the weighted-LASSO KKT conditions for `fit`.
double kkt_violation(const FeatureMatrix& features,
                     const Eigen::Ref<const Eigen::VectorXd>& response, const LassoFit& fit,
                     double lambda, const Eigen::Ref<const Eigen::VectorXd>& weights);

}  // namespace twlasso
