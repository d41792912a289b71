#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twlasso/lasso.hpp"
#include "twlasso/panel.hpp"

namespace twlasso {

enum class WeightVariant { two_way, cluster, heteroskedastic, initial };

const char* to_string(WeightVariant v);

/// Per-regressor scores v_{it,j} = f_{it,j} V_it as an (N*T) x p matrix in
/// panel order. `time_positions` gives the calendar index of each period
/// (consecutive when empty) and drives kernel distances.
struct PanelScores {
  Eigen::MatrixXd values;
  Index n_units = 0;
  Index n_periods = 0;
  std::vector<Index> time_positions;

  Index cols() const { return values.cols(); }
  static PanelScores from_residuals(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                    const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                    Index n_units, Index n_periods,
                                    std::vector<Index> time_positions = {});
};

/// Hoeffding-type decomposition v = a_i + g_t + e_it of every score column.
struct ComponentDecomposition {
  Eigen::MatrixXd a;  // N x p, unit means over t
  Eigen::MatrixXd g;  // T x p, period means over i
  Eigen::MatrixXd e;  // (N*T) x p remainder
  Index n_units = 0;
  Index n_periods = 0;
};

ComponentDecomposition decompose(const PanelScores& scores);

struct PenaltyPlan {
  Eigen::VectorXd weights;  // omega_j
  Eigen::VectorXd omega2_a;
  Eigen::VectorXd omega2_g;
  Eigen::VectorXd omega2_e;
  std::optional<double> lambda;
  double c_lambda = 2.0;
  double gamma = 0.0;
  Eigen::VectorXi bandwidths;  // per column M_j
  WeightVariant variant = WeightVariant::two_way;
  std::vector<Index> degenerate_columns;
  std::vector<std::string> diagnostics;
};

/// Feasible two-way weights with the max(. - omega2_e, 0) adjustment and a
/// Bartlett kernel of bandwidth M for the period and remainder terms.
PenaltyPlan feasible_weights(const PanelScores& scores, Index bandwidth);
/// Same with a bandwidth per column.
PenaltyPlan feasible_weights(const PanelScores& scores, const Eigen::VectorXi& bandwidths);

/// Comparison weights: heteroskedastic (1/NT) sum v^2 or one-way cluster
/// omega2_a.
PenaltyPlan baseline_weights(const PanelScores& scores, WeightVariant variant);

/// Common penalty level 2 C sqrt(N) T Phi^{-1}(1 - gamma / 2p), or with
/// sqrt(N T) in place of sqrt(N) T when `degenerate`.
double penalty_level(Index n_units, Index n_periods, Index p, double c_lambda, double gamma,
                     bool degenerate);

/// gamma = alpha / log(max(N, T)).
double default_gamma(Index n_units, Index n_periods, double alpha = 0.1);

/// Per-column Andrews bandwidths from each column's cross-sectional averages.
Eigen::VectorXi column_bandwidths(const PanelScores& scores);

/// Replaces zero weights by the smallest positive weight (flagged).
/// Returns false when no positive weight exists.
bool fill_degenerate_weights(PenaltyPlan& plan, std::optional<Index> skip_column = std::nullopt);

struct InfeasibleWeights {
  Eigen::VectorXd weights;
  Eigen::VectorXd omega2_a;
  Eigen::VectorXd omega2_g;
  Eigen::VectorXd omega2_e;
  bool truncated = false;  // T not divisible by h; trailing periods dropped
};

/// Weights from known components, period term built on blocks of length h.
InfeasibleWeights infeasible_weights(const ComponentDecomposition& components, Index block_length);

struct RegularizationCheck {
  double max_statistic = 0.0;  // max_j |sum_it v_{it,j}| / omega_j
  double threshold = 0.0;      // lambda / (2 C)
  bool holds = false;
};

RegularizationCheck regularization_event(const PanelScores& scores,
                                         const Eigen::Ref<const Eigen::VectorXd>& weights,
                                         double lambda, double c_lambda);

struct PanelLassoConfig {
  WeightVariant variant = WeightVariant::two_way;
  double c_lambda = 2.0;
  std::optional<double> gamma;  // default alpha / log(max(N, T))
  double alpha = 0.1;
  std::optional<Index> bandwidth;  // override of the per-column Andrews rule
  int max_refinements = 10;
  int min_refinements = 2;
  bool post = true;
  LassoOptions solver;
};

struct PanelLassoResult {
  LassoFit fit;       // post-LASSO fit when config.post
  LassoFit lasso;     // penalized fit from the final refinement
  PenaltyPlan plan;
  int refinements = 0;
  bool stabilized = false;
};

/// Iterative weighted LASSO: initial variance-product weights, then
/// repeated weight updates from post-LASSO residuals until the selected set
/// repeats (at least `min_refinements` updates).
PanelLassoResult iterate_two_way_lasso(const FeatureMatrix& features,
                                       const Eigen::Ref<const Eigen::VectorXd>& response,
                                       const PanelLassoConfig& config = {});

/// Same on a precomputed Gram system. `design` holds the sample rows in panel
/// order for n_units x n_periods cells.
PanelLassoResult iterate_panel_lasso(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                     const GramSystem& sys,
                                     const Eigen::Ref<const Eigen::VectorXd>& response,
                                     Index n_units, Index n_periods,
                                     const std::vector<Index>& time_positions,
                                     const PanelLassoConfig& config);

}  // namespace twlasso
