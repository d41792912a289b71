#include "twlasso/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twlasso/bandwidth.hpp"
#include "twlasso/errors.hpp"

namespace twlasso {

const char* to_string(WeightVariant v) {
  switch (v) {
    case WeightVariant::two_way: return "two_way";
    case WeightVariant::cluster: return "cluster";
    case WeightVariant::heteroskedastic: return "heteroskedastic";
    case WeightVariant::initial: return "initial";
  }
  return "?";
}

namespace {

using ConstPeriodMap = Eigen::Map<const Eigen::MatrixXd>;  // T x N view of one column

ConstPeriodMap column_view(const Eigen::MatrixXd& m, Index j, Index n_units, Index n_periods) {
  return ConstPeriodMap(m.col(j).data(), n_periods, n_units);
}

void check_scores(const PanelScores& s) {
  if (s.n_units < 1 || s.n_periods < 1 || s.values.rows() != s.n_units * s.n_periods) {
    throw InputError("scores: row count must equal N*T");
  }
  if (!s.time_positions.empty() && static_cast<Index>(s.time_positions.size()) != s.n_periods) {
    throw InputError("scores: time positions do not match T");
  }
  if (!s.values.allFinite()) throw InputError("scores: non-finite value");
}

// sum_t sum_s k(|tau_t - tau_s| / M) x_t x_s
template <typename Vec>
double kernel_sum(const Vec& x, const std::vector<Index>& pos, Index bandwidth) {
  if (pos.empty()) return bartlett_long_run_sum(x, bandwidth);
  const Index n = x.size();
  double total = x.squaredNorm();
  for (Index t = 0; t < n; ++t) {
    for (Index s = t + 1; s < n; ++s) {
      const Index lag = pos[s] - pos[t];
      if (lag >= bandwidth) break;
      total += 2.0 * bartlett_lag(lag, bandwidth) * x(t) * x(s);
    }
  }
  return total;
}

}  // namespace

PanelScores PanelScores::from_residuals(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                        const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                        Index n_units, Index n_periods,
                                        std::vector<Index> time_positions) {
  if (design.rows() != residuals.size()) throw InputError("scores: residual length mismatch");
  PanelScores s;
  s.values = design.array().colwise() * residuals.array();
  s.n_units = n_units;
  s.n_periods = n_periods;
  s.time_positions = std::move(time_positions);
  return s;
}

ComponentDecomposition decompose(const PanelScores& scores) {
  check_scores(scores);
  const Index n = scores.n_units;
  const Index t = scores.n_periods;
  const Index p = scores.cols();
  ComponentDecomposition d;
  d.n_units = n;
  d.n_periods = t;
  d.a.resize(n, p);
  d.g.resize(t, p);
  d.e.resize(n * t, p);
  for (Index j = 0; j < p; ++j) {
    const auto v = column_view(scores.values, j, n, t);
    d.a.col(j) = v.colwise().mean().transpose();
    d.g.col(j) = v.rowwise().mean();
    Eigen::Map<Eigen::MatrixXd> e(d.e.col(j).data(), t, n);
    e = v;
    e.rowwise() -= d.a.col(j).transpose();
    e.colwise() -= d.g.col(j);
  }
  return d;
}

PenaltyPlan feasible_weights(const PanelScores& scores, Index bandwidth) {
  if (bandwidth < 1) throw DomainError("feasible_weights: bandwidth must be >= 1");
  return feasible_weights(scores,
                          Eigen::VectorXi::Constant(scores.cols(), static_cast<int>(bandwidth)));
}

PenaltyPlan feasible_weights(const PanelScores& scores, const Eigen::VectorXi& bandwidths) {
  const ComponentDecomposition d = decompose(scores);
  const Index n = scores.n_units;
  const Index t = scores.n_periods;
  const Index p = scores.cols();
  if (bandwidths.size() != p) throw InputError("feasible_weights: one bandwidth per column");
  const double scale = 1.0 / (static_cast<double>(n) * t * t);

  PenaltyPlan plan;
  plan.variant = WeightVariant::two_way;
  plan.bandwidths = bandwidths;
  plan.omega2_a.resize(p);
  plan.omega2_g.resize(p);
  plan.omega2_e.resize(p);
  plan.weights.resize(p);
  bool warned = false;
  for (Index j = 0; j < p; ++j) {
    const Index m = bandwidths(j);
    if (m < 1) throw DomainError("feasible_weights: bandwidth must be >= 1");
    if (m >= t && !warned) {
      plan.diagnostics.push_back("bandwidth M >= T; kernel covers every lag");
      warned = true;
    }
    plan.omega2_a(j) = d.a.col(j).squaredNorm() / static_cast<double>(n);
    const Eigen::VectorXd period_sums = d.g.col(j) * static_cast<double>(n);
    plan.omega2_g(j) = scale * kernel_sum(period_sums, scores.time_positions, m);
    double e2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      e2 += kernel_sum(d.e.col(j).segment(i * t, t), scores.time_positions, m);
    }
    plan.omega2_e(j) = scale * e2;
    const double w2 = std::max(plan.omega2_a(j) - plan.omega2_e(j), 0.0) +
                      std::max(plan.omega2_g(j) - plan.omega2_e(j), 0.0) + plan.omega2_e(j);
    plan.weights(j) = std::sqrt(std::max(w2, 0.0));
    if (scores.values.col(j).cwiseAbs().maxCoeff() == 0.0) {
      plan.degenerate_columns.push_back(j);
    }
  }
  if (!plan.degenerate_columns.empty()) {
    plan.diagnostics.push_back(std::to_string(plan.degenerate_columns.size()) +
                               " column(s) with all-zero scores; weight set to 0");
  }
  return plan;
}

PenaltyPlan baseline_weights(const PanelScores& scores, WeightVariant variant) {
  check_scores(scores);
  if (variant != WeightVariant::heteroskedastic && variant != WeightVariant::cluster) {
    throw DomainError("baseline_weights: variant must be heteroskedastic or cluster");
  }
  const Index n = scores.n_units;
  const Index t = scores.n_periods;
  const Index p = scores.cols();
  PenaltyPlan plan;
  plan.variant = variant;
  plan.weights.resize(p);
  plan.omega2_a.resize(p);
  plan.omega2_g = Eigen::VectorXd::Zero(p);
  plan.omega2_e = Eigen::VectorXd::Zero(p);
  for (Index j = 0; j < p; ++j) {
    const auto v = column_view(scores.values, j, n, t);
    plan.omega2_a(j) = v.colwise().sum().squaredNorm() / (static_cast<double>(n) * t * t);
    const double w2 = variant == WeightVariant::heteroskedastic
                          ? v.squaredNorm() / (static_cast<double>(n) * t)
                          : plan.omega2_a(j);
    plan.weights(j) = std::sqrt(w2);
    if (v.cwiseAbs().maxCoeff() == 0.0) plan.degenerate_columns.push_back(j);
  }
  if (!plan.degenerate_columns.empty()) {
    plan.diagnostics.push_back(std::to_string(plan.degenerate_columns.size()) +
                               " column(s) with all-zero scores; weight set to 0");
  }
  return plan;
}

double penalty_level(Index n_units, Index n_periods, Index p, double c_lambda, double gamma,
                     bool degenerate) {
  if (p < 1) throw DomainError("penalty_level: p must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("penalty_level: gamma must be in (0, 1)");
  if (!(c_lambda > 1.0)) throw DomainError("penalty_level: C_lambda must exceed 1");
  const double tail = gamma / (2.0 * static_cast<double>(p));
  if (tail >= 1.0) throw DomainError("penalty_level: gamma / 2p must be < 1");
  const double z = normal_quantile(1.0 - tail);
  const double n = static_cast<double>(n_units);
  const double t = static_cast<double>(n_periods);
  const double scale = degenerate ? std::sqrt(n * t) : std::sqrt(n) * t;
  return 2.0 * c_lambda * scale * z;
}

double default_gamma(Index n_units, Index n_periods, double alpha) {
  const double m = static_cast<double>(std::max(n_units, n_periods));
  if (!(m > 1.0)) throw DomainError("default_gamma: need max(N, T) > 1");
  return alpha / std::log(m);
}

Eigen::VectorXi column_bandwidths(const PanelScores& scores) {
  check_scores(scores);
  const Index p = scores.cols();
  Eigen::VectorXi out(p);
  for (Index j = 0; j < p; ++j) {
    const auto v = column_view(scores.values, j, scores.n_units, scores.n_periods);
    const Eigen::VectorXd avg = v.rowwise().mean();
    if (scores.n_periods < 3) {
      out(j) = 1;
      continue;
    }
    out(j) = static_cast<int>(andrews_bandwidth_series(avg, scores.time_positions).bandwidth);
  }
  return out;
}

bool fill_degenerate_weights(PenaltyPlan& plan, std::optional<Index> skip_column) {
  double min_pos = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < plan.weights.size(); ++j) {
    if (skip_column && *skip_column == j) continue;
    if (plan.weights(j) > 0.0) min_pos = std::min(min_pos, plan.weights(j));
  }
  if (!std::isfinite(min_pos)) return false;
  Index filled = 0;
  for (Index j = 0; j < plan.weights.size(); ++j) {
    if (skip_column && *skip_column == j) continue;
    if (!(plan.weights(j) > 0.0)) {
      plan.weights(j) = min_pos;
      ++filled;
    }
  }
  if (filled > 0) {
    plan.diagnostics.push_back(std::to_string(filled) +
                               " zero weight(s) replaced by the smallest positive weight");
  }
  return true;
}

InfeasibleWeights infeasible_weights(const ComponentDecomposition& c, Index block_length) {
  const Index n = c.n_units;
  const Index t = c.n_periods;
  if (block_length < 1) throw DomainError("infeasible_weights: block length must be >= 1");
  if (block_length > t) throw DomainError("infeasible_weights: block length exceeds T");
  const Index p = c.a.cols();
  const Index blocks = t / block_length;
  InfeasibleWeights w;
  w.truncated = blocks * block_length != t;
  w.omega2_a.resize(p);
  w.omega2_g.resize(p);
  w.omega2_e.resize(p);
  const double nn = static_cast<double>(n);
  const double tt = static_cast<double>(t);
  for (Index j = 0; j < p; ++j) {
    w.omega2_a(j) = c.a.col(j).squaredNorm() / nn;
    double g2 = 0.0;
    for (Index b = 0; b < blocks; ++b) {
      const double s = c.g.col(j).segment(b * block_length, block_length).sum();
      g2 += s * s;
    }
    w.omega2_g(j) = nn / (tt * tt) * g2;
    const Eigen::Map<const Eigen::MatrixXd> e(c.e.col(j).data(), t, n);
    w.omega2_e(j) = e.colwise().sum().squaredNorm() / (nn * tt * tt);
  }
  w.weights = (w.omega2_a + w.omega2_g + w.omega2_e).cwiseSqrt();
  return w;
}

RegularizationCheck regularization_event(const PanelScores& scores,
                                         const Eigen::Ref<const Eigen::VectorXd>& weights,
                                         double lambda, double c_lambda) {
  check_scores(scores);
  if (weights.size() != scores.cols()) throw InputError("regularization_event: weight length");
  RegularizationCheck out;
  out.threshold = lambda / (2.0 * c_lambda);
  const Eigen::VectorXd sums = scores.values.colwise().sum().transpose();
  for (Index j = 0; j < sums.size(); ++j) {
    const double stat = weights(j) > 0.0 ? std::abs(sums(j)) / weights(j)
                                         : (sums(j) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    out.max_statistic = std::max(out.max_statistic, stat);
  }
  out.holds = out.max_statistic <= out.threshold;
  return out;
}

namespace {

Eigen::VectorXd initial_weights(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                const GramSystem& sys,
                                const Eigen::Ref<const Eigen::VectorXd>& response) {
  const double n = static_cast<double>(design.rows());
  const double denom = std::max(n - 1.0, 1.0);
  const double var_y = (response.array() - response.mean()).square().sum() / denom;
  Eigen::VectorXd w(design.cols());
  for (Index j = 0; j < design.cols(); ++j) w(j) = std::sqrt(sys.gram(j, j) / denom * var_y);
  return w;
}

LassoFit to_fit(const Eigen::Ref<const Eigen::MatrixXd>& design,
                const Eigen::Ref<const Eigen::VectorXd>& y, GramSolution&& sol, double lambda,
                const Eigen::Ref<const Eigen::VectorXd>& weights) {
  LassoFit fit;
  fit.coefficients = std::move(sol.coefficients);
  fit.selected = support_of(fit.coefficients);
  fit.intercept = sol.intercept;
  fit.residuals.resize(y.size());
  fit.residuals = y.array() - fit.intercept;
  for (Index j : fit.selected) fit.residuals.noalias() -= design.col(j) * fit.coefficients(j);
  const double n = static_cast<double>(y.size());
  fit.objective_value = fit.residuals.squaredNorm() / n +
                        lambda / n * weights.cwiseProduct(fit.coefficients.cwiseAbs()).sum();
  fit.n_iterations = sol.n_iterations;
  fit.converged = sol.converged;
  fit.rank_deficient = sol.rank_deficient;
  fit.lambda = lambda;
  return fit;
}

}  // namespace

PanelLassoResult iterate_panel_lasso(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                     const GramSystem& sys,
                                     const Eigen::Ref<const Eigen::VectorXd>& response,
                                     Index n_units, Index n_periods,
                                     const std::vector<Index>& time_positions,
                                     const PanelLassoConfig& config) {
  if (design.rows() != n_units * n_periods || response.size() != design.rows()) {
    throw InputError("iterate_two_way_lasso: design rows must equal N*T");
  }
  if (config.variant == WeightVariant::initial) {
    throw DomainError("iterate_two_way_lasso: variant must be two_way, cluster or heteroskedastic");
  }
  const Index p = design.cols();
  const Index penalized = p - (sys.intercept_column ? 1 : 0);
  if (penalized < 1) throw InputError("iterate_two_way_lasso: no penalized columns");
  const double gamma = config.gamma ? *config.gamma : default_gamma(n_units, n_periods, config.alpha);
  const GramResponse resp = make_response(design, sys, response);

  auto run = [&](double lambda, const Eigen::VectorXd& w, LassoFit& lasso_out) {
    GramSolution sol = solve_lasso_gram(sys, resp, lambda, w, config.solver);
    lasso_out = to_fit(design, response, GramSolution(sol), lambda, w);
    GramSolution post = solve_ols_gram(sys, resp, lasso_out.selected);
    post.n_iterations = sol.n_iterations;
    post.converged = sol.converged;
    return to_fit(design, response, std::move(post), 0.0, Eigen::VectorXd::Zero(p));
  };

  PanelLassoResult result;
  PenaltyPlan plan;
  plan.variant = WeightVariant::initial;
  plan.weights = initial_weights(design, sys, response);
  if (sys.intercept_column) plan.weights(*sys.intercept_column) = 0.0;
  plan.c_lambda = config.c_lambda;
  plan.gamma = gamma;
  plan.lambda = penalty_level(n_units, n_periods, penalized, config.c_lambda, gamma, true);

  LassoFit lasso;
  LassoFit post = run(*plan.lambda, plan.weights, lasso);
  result.plan = plan;
  result.lasso = lasso;
  result.fit = config.post ? post : lasso;

  const bool degenerate_level = config.variant == WeightVariant::heteroskedastic;
  const double lambda =
      penalty_level(n_units, n_periods, penalized, config.c_lambda, gamma, degenerate_level);
  std::vector<Index> previous = lasso.selected;
  for (int it = 1; it <= config.max_refinements; ++it) {
    const PanelScores scores =
        PanelScores::from_residuals(design, post.residuals, n_units, n_periods, time_positions);
    PenaltyPlan next;
    if (config.variant == WeightVariant::two_way) {
      const Eigen::VectorXi m = config.bandwidth
                                    ? Eigen::VectorXi::Constant(p, static_cast<int>(*config.bandwidth))
                                    : column_bandwidths(scores);
      next = feasible_weights(scores, m);
    } else {
      next = baseline_weights(scores, config.variant);
    }
    if (sys.intercept_column) next.weights(*sys.intercept_column) = 0.0;
    if (!fill_degenerate_weights(next, sys.intercept_column)) {
      result.plan.diagnostics.push_back("all residual scores are zero; keeping previous fit");
      result.stabilized = true;
      break;
    }
    next.c_lambda = config.c_lambda;
    next.gamma = gamma;
    next.lambda = lambda;

    post = run(lambda, next.weights, lasso);
    result.plan = std::move(next);
    result.lasso = lasso;
    result.fit = config.post ? post : lasso;
    result.refinements = it;
    if (it >= config.min_refinements && lasso.selected == previous) {
      result.stabilized = true;
      break;
    }
    previous = lasso.selected;
  }
  return result;
}

PanelLassoResult iterate_two_way_lasso(const FeatureMatrix& features,
                                       const Eigen::Ref<const Eigen::VectorXd>& response,
                                       const PanelLassoConfig& config) {
  if (features.rows() != features.n_units * features.n_periods) {
    throw InputError("iterate_two_way_lasso: features must carry panel dimensions");
  }
  const GramSystem sys = GramSystem::from_design(features.values, features.intercept_column);
  return iterate_panel_lasso(features.values, sys, response, features.n_units, features.n_periods,
                             {}, config);
}

}  // namespace twlasso
