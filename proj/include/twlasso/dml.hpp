#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twlasso/crossfit.hpp"
#include "twlasso/panel.hpp"
#include "twlasso/penalty.hpp"

namespace twlasso {

enum class FirstStage { pols, h_lasso, c_lasso, tw_lasso, oracle };

const char* to_string(FirstStage m);
/// Accepts pols, h_lasso, c_lasso, tw_lasso (and h, c, tw). Throws ConfigError.
FirstStage parse_first_stage(const std::string& name);

/// One projection equation: coefficients over the dictionary columns.
struct EquationFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  std::vector<Index> selected;
  int refinements = 0;
  int iterations = 0;
  bool rank_deficient = false;
};

/// zeta: Z on f, beta: Y on f, pi: D on f.
struct NuisanceFit {
  EquationFit zeta;
  EquationFit beta;
  EquationFit pi;
};

struct DmlConfig {
  FirstStage first_stage = FirstStage::tw_lasso;
  /// Penalty settings shared by the LASSO first stages; the weight variant is
  /// taken from first_stage.
  PanelLassoConfig lasso;
  /// Variance bandwidth override; per-fold Andrews rule otherwise.
  std::optional<Index> bandwidth;
  /// Fail when a LASSO keeps more than this fraction of the fitting rows.
  std::optional<double> max_selected_fraction;
  /// Known nuisance coefficients, used when first_stage == oracle.
  std::optional<NuisanceFit> oracle;
};

struct VarianceResult {
  double omega_a = 0.0;
  double omega_dk = 0.0;
  double omega_nw = 0.0;
  double a_hat = 0.0;
  double var_chs = 0.0;
  double var_dka = 0.0;
};

struct FoldScores {
  Eigen::MatrixXd psi;    // N_k x T_l at the final theta
  Eigen::MatrixXd psi_a;  // N_k x T_l
  Index bandwidth = 1;
};

struct DmlEstimate {
  double theta = 0.0;
  double var_chs = 0.0;
  double var_dka = 0.0;
  double se_chs = 0.0;  // NaN when var_chs < 0
  double se_dka = 0.0;
  std::array<double, 2> ci_chs{};
  std::array<double, 2> ci_dka{};
  bool chs_negative = false;
  VarianceResult variance;
  std::vector<Index> bandwidths;
  FirstStage method = FirstStage::tw_lasso;
  bool crossfit = false;
  std::optional<CrossFitPlan> plan;
  Eigen::MatrixXd score_matrix;  // N x T
  /// Selected-set sizes {zeta, beta, pi}, one entry per fold (or one overall).
  std::vector<std::array<Index, 3>> selected_counts;
  std::optional<NuisanceFit> nuisance;  // full-sample fits
  Index n_units = 0;
  Index n_periods = 0;
  std::vector<std::string> diagnostics;
};

/// psi = z_res * (y_res - d_res * theta), elementwise.
Eigen::VectorXd orthogonal_score(const Eigen::Ref<const Eigen::VectorXd>& z_res,
                                 const Eigen::Ref<const Eigen::VectorXd>& y_res,
                                 const Eigen::Ref<const Eigen::VectorXd>& d_res, double theta);

/// Unscaled sums for one N x T score block:
///   a  = sum_i (sum_t psi_it)^2
///   dk = sum_t sum_r k(|t-r|/M) S_t S_r,  S_t = sum_i psi_it
///   nw = sum_i sum_t sum_r k(|t-r|/M) psi_it psi_ir
struct ScoreSums {
  double a = 0.0;
  double dk = 0.0;
  double nw = 0.0;
};
ScoreSums score_sums(const Eigen::Ref<const Eigen::MatrixXd>& psi, Index bandwidth);

/// Cross-fit variances averaged over the K*L folds. Throws DomainError for
/// a bandwidth below one.
VarianceResult variance_crossfit(const std::vector<FoldScores>& folds, int K, int L);

/// Full-sample variances with A = (1/NT) sum psi_a.
VarianceResult variance_fullsample(const Eigen::Ref<const Eigen::MatrixXd>& psi,
                                   const Eigen::Ref<const Eigen::MatrixXd>& psi_a, Index bandwidth);

DmlEstimate estimate_fullsample(const PanelDataset& data, const FeatureMatrix& dictionary,
                                const DmlConfig& config = {});

DmlEstimate estimate_crossfit(const PanelDataset& data, const FeatureMatrix& dictionary,
                              const CrossFitPlan& plan, const DmlConfig& config = {});

/// {theta, se_chs, se_dka, var_chs, var_dka, ci_chs, ci_dka, method, crossfit,
///  K, L, bandwidths, selected_counts, ...}
std::string to_json(const DmlEstimate& estimate, int indent = 2);

/// Fixed-width human-readable summary.
std::string format_table(const DmlEstimate& estimate);

}  // namespace twlasso
