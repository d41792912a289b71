#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twlasso/dml.hpp"
#include "twlasso/panel.hpp"
#include "twlasso/penalty.hpp"

namespace twlasso {

struct DgpConfig {
  Index n_units = 25;
  Index n_periods = 25;
  Index p = 200;
  double theta0 = 1.0;
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double ar_coef = 0.5;
  double ar_init_var = 0.75;
  double ar_innovation_var = 0.75;
  double toeplitz_base = 0.5;
  bool iid_mode = false;
  /// Multipliers on the outcome and treatment disturbances U and V.
  double u_scale = 1.0;
  double v_scale = 1.0;
  std::uint64_t seed = 1;

  /// Throws ConfigError for negative weights, |ar_coef| >= 1 and similar.
  void validate() const;
};

/// Realized components behind a generated panel.
struct DgpTruth {
  double theta0 = 1.0;
  Eigen::VectorXd beta0;  // 1/j^2
  Eigen::VectorXd pi0;
  Eigen::MatrixXd x_unit;    // N x p   (alpha)
  Eigen::MatrixXd x_period;  // T x p   (gamma)
  Eigen::MatrixXd x_cell;    // NT x p  (epsilon)
  Eigen::VectorXd u_unit, v_unit;      // N
  Eigen::VectorXd u_period, v_period;  // T
  Eigen::VectorXd u_cell, v_cell;      // NT
  Eigen::VectorXd u, v;                // assembled disturbances, NT
};

struct SimDataset {
  PanelDataset data;
  DgpTruth truth;
};

SimDataset generate(const DgpConfig& config);

/// Covariates of a generated panel as the first-stage dictionary (no
/// intercept column; the solvers fit it).
FeatureMatrix sim_dictionary(const PanelDataset& data);

/// Scores X_itj V_it of the treatment equation and their exact components
/// w1^2 alpha_ij alpha^v_i, w2^2 gamma_tj gamma^v_t and the remainder.
/// In iid mode the unit and period parts are zero.
PanelScores true_scores(const SimDataset& sim);
ComponentDecomposition true_components(const SimDataset& sim, const DgpConfig& config);

struct MethodSpec {
  FirstStage method = FirstStage::tw_lasso;
  bool crossfit = false;
};

std::string method_label(const MethodSpec& m);

struct EstimationSettings {
  int K = 4;
  int L = 8;
  double c_lambda = 2.0;
  std::optional<double> gamma;
  double alpha = 0.1;
  int max_refinements = 10;
  std::optional<Index> bandwidth;         // variance
  std::optional<Index> weight_bandwidth;  // penalty weights
  double max_selected_fraction = 0.5;
  int threads = 1;
};

struct ReplicationOutcome {
  bool ok = false;
  double theta = 0.0;
  double se_chs = 0.0;
  double se_dka = 0.0;
  double selected = 0.0;  // treatment-equation selection size, fold average
  std::string error;
};

/// All methods on replication r (dataset seed base + r).
std::vector<ReplicationOutcome> run_replication(const DgpConfig& config,
                                                const std::vector<MethodSpec>& methods,
                                                Index replication,
                                                const EstimationSettings& settings);

struct McRow {
  MethodSpec method;
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double coverage_chs = 0.0;  // percent
  double coverage_dka = 0.0;
  double mean_selected = 0.0;
  Index n_reps = 0;
  Index n_failures = 0;
  bool valid = true;
};

struct McReport {
  DgpConfig dgp;
  EstimationSettings settings;
  Index n_reps = 0;
  std::vector<McRow> rows;

  std::string to_csv() const;
  std::string to_json(int indent = 2) const;
  std::string to_table() const;
};

/// Aggregates per-replication outcomes for one method.
McRow summarize(const MethodSpec& method, const std::vector<ReplicationOutcome>& outcomes,
                double theta0);

McReport run_monte_carlo(const DgpConfig& config, const std::vector<MethodSpec>& methods,
                         Index n_reps, const EstimationSettings& settings = {});

}  // namespace twlasso
