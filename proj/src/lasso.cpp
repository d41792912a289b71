#include "twlasso/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "twlasso/errors.hpp"

namespace twlasso {

namespace {

inline double soft_threshold(double z, double thr) {
  if (z > thr) return z - thr;
  if (z < -thr) return z + thr;
  return 0.0;
}

void check_weights(const Eigen::Ref<const Eigen::VectorXd>& weights, Index p) {
  if (weights.size() != p) throw InputError("lasso: weights length does not match design");
  for (Index j = 0; j < p; ++j) {
    if (!std::isfinite(weights(j))) throw InputError("lasso: non-finite penalty weight");
    if (weights(j) < 0.0) throw DomainError("lasso: negative penalty weight");
  }
}

}  // namespace

GramSystem GramSystem::from_design(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                   std::optional<Index> intercept_column) {
  if (!design.allFinite()) throw InputError("lasso: non-finite design entry");
  GramSystem sys;
  sys.n = design.rows();
  sys.intercept_column = intercept_column;
  sys.means = design.colwise().mean().transpose();
  const Eigen::MatrixXd centered = design.rowwise() - sys.means.transpose();
  sys.gram = Eigen::MatrixXd::Zero(design.cols(), design.cols());
  sys.gram.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  sys.gram.triangularView<Eigen::StrictlyUpper>() = sys.gram.transpose();
  return sys;
}

GramSystem GramSystem::from_raw_sums(Index n, const Eigen::VectorXd& column_sums,
                                     const Eigen::MatrixXd& raw_cross,
                                     std::optional<Index> intercept_column) {
  GramSystem sys;
  sys.n = n;
  sys.intercept_column = intercept_column;
  sys.means = column_sums / static_cast<double>(n);
  sys.gram = raw_cross - static_cast<double>(n) * sys.means * sys.means.transpose();
  return sys;
}

GramResponse make_response(const Eigen::Ref<const Eigen::MatrixXd>& design, const GramSystem& sys,
                           const Eigen::Ref<const Eigen::VectorXd>& response) {
  if (design.rows() != response.size()) throw InputError("lasso: response length mismatch");
  if (!response.allFinite()) throw InputError("lasso: non-finite response");
  GramResponse r;
  r.mean = response.mean();
  const Eigen::VectorXd yc = response.array() - r.mean;
  r.cross = design.transpose() * yc;  // centering of F is implied since sum(yc) = 0
  r.ss = yc.squaredNorm();
  (void)sys;
  return r;
}

double gram_objective(const GramSystem& sys, const GramResponse& resp,
                      const Eigen::VectorXd& coefficients, double lambda,
                      const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double n = static_cast<double>(sys.n);
  const double rss = resp.ss - 2.0 * coefficients.dot(resp.cross) +
                     coefficients.dot(sys.gram * coefficients);
  return std::max(rss, 0.0) / n + lambda / n * weights.cwiseProduct(coefficients.cwiseAbs()).sum();
}

std::vector<Index> support_of(Eigen::VectorXd& coefficients) {
  std::vector<Index> s;
  for (Index j = 0; j < coefficients.size(); ++j) {
    if (std::abs(coefficients(j)) < 1e-12) coefficients(j) = 0.0;
    if (coefficients(j) != 0.0) s.push_back(j);
  }
  return s;
}

GramSolution solve_lasso_gram(const GramSystem& sys, const GramResponse& resp, double lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& weights,
                              const LassoOptions& opts) {
  const Index p = sys.cols();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lasso: lambda must be >= 0");
  check_weights(weights, p);
  if (resp.cross.size() != p) throw InputError("lasso: response statistics do not match design");

  std::vector<char> active_ok(p, 1);
  for (Index j = 0; j < p; ++j) {
    if (sys.intercept_column && *sys.intercept_column == j) {
      active_ok[j] = 0;
      continue;
    }
    const double raw = sys.gram(j, j) + static_cast<double>(sys.n) * sys.means(j) * sys.means(j);
    if (!(sys.gram(j, j) > 1e-12 * raw) || sys.gram(j, j) <= 0.0) {
      throw InputError("lasso: column " + std::to_string(j) + " has zero variance");
    }
  }

  GramSolution sol;
  sol.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad = resp.cross;  // F_c'(y_c - F_c b)
  Eigen::VectorXd& b = sol.coefficients;

  // One coordinate-descent sweep over `coords`; returns the largest change.
  auto sweep = [&](const std::vector<Index>& coords) {
    double max_delta = 0.0;
    for (Index j : coords) {
      const double gjj = sys.gram(j, j);
      const double z = grad(j) + gjj * b(j);
      const double bj = soft_threshold(z, 0.5 * lambda * weights(j)) / gjj;
      const double delta = bj - b(j);
      if (delta != 0.0) {
        grad.noalias() -= sys.gram.col(j) * delta;
        b(j) = bj;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (opts.objective_trace) {
      opts.objective_trace->push_back(gram_objective(sys, resp, b, lambda, weights));
    }
    return max_delta;
  };

  std::vector<Index> all;
  for (Index j = 0; j < p; ++j) {
    if (active_ok[j]) all.push_back(j);
  }

  sol.converged = false;
  int sweeps = 0;
  while (sweeps < opts.max_iter) {
    const double full_delta = sweep(all);
    ++sweeps;
    if (full_delta < opts.tol) {
      sol.converged = true;
      break;
    }
    // Iterate on the current support until it settles, then re-check all.
    std::vector<Index> support;
    for (Index j : all) {
      if (b(j) != 0.0) support.push_back(j);
    }
    while (sweeps < opts.max_iter) {
      const double d = sweep(support);
      ++sweeps;
      if (d < opts.tol) break;
    }
  }
  sol.n_iterations = sweeps;
  support_of(b);
  sol.intercept = resp.mean - sys.means.dot(b);
  return sol;
}

GramSolution solve_ols_gram(const GramSystem& sys, const GramResponse& resp,
                            const std::vector<Index>& selected) {
  const Index p = sys.cols();
  std::vector<Index> cols;
  for (Index j : selected) {
    if (j < 0 || j >= p) throw InputError("post_lasso: selected index out of range");
    if (sys.intercept_column && *sys.intercept_column == j) continue;
    cols.push_back(j);
  }
  GramSolution sol;
  sol.coefficients = Eigen::VectorXd::Zero(p);
  const Index k = static_cast<Index>(cols.size());
  if (k > 0) {
    Eigen::MatrixXd g(k, k);
    Eigen::VectorXd c(k);
    for (Index a = 0; a < k; ++a) {
      c(a) = resp.cross(cols[a]);
      for (Index bb = 0; bb < k; ++bb) g(a, bb) = sys.gram(cols[a], cols[bb]);
    }
    const OlsResult r = solve_normal_equations(g, c);
    for (Index a = 0; a < k; ++a) sol.coefficients(cols[a]) = r.coefficients(a);
    sol.rank_deficient = r.rank_deficient;
  }
  sol.intercept = resp.mean - sys.means.dot(sol.coefficients);
  return sol;
}

namespace {

LassoFit finish_fit(const FeatureMatrix& features, const Eigen::Ref<const Eigen::VectorXd>& y,
                    GramSolution&& sol, double lambda,
                    const Eigen::Ref<const Eigen::VectorXd>& weights) {
  LassoFit fit;
  fit.coefficients = std::move(sol.coefficients);
  fit.selected = support_of(fit.coefficients);
  fit.intercept = sol.intercept;
  fit.residuals = (y - features.values * fit.coefficients).array() - fit.intercept;
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

LassoFit solve_weighted_lasso(const FeatureMatrix& features,
                              const Eigen::Ref<const Eigen::VectorXd>& response, double lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& weights, double tol,
                              int max_iter, std::vector<double>* objective_trace) {
  const GramSystem sys = GramSystem::from_design(features.values, features.intercept_column);
  const GramResponse resp = make_response(features.values, sys, response);
  LassoOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  opts.objective_trace = objective_trace;
  Eigen::VectorXd w = weights;
  if (features.intercept_column) w(*features.intercept_column) = 0.0;
  return finish_fit(features, response, solve_lasso_gram(sys, resp, lambda, weights, opts), lambda,
                    w);
}

LassoFit post_lasso(const FeatureMatrix& features,
                    const Eigen::Ref<const Eigen::VectorXd>& response,
                    const std::vector<Index>& selected) {
  if (!features.values.allFinite() || !response.allFinite()) {
    throw InputError("post_lasso: non-finite input");
  }
  if (features.rows() != response.size()) throw InputError("post_lasso: length mismatch");
  std::vector<Index> cols;
  for (Index j : selected) {
    if (j < 0 || j >= features.cols()) throw InputError("post_lasso: index out of range");
    if (features.intercept_column && *features.intercept_column == j) continue;
    cols.push_back(j);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

  GramSolution sol;
  sol.coefficients = Eigen::VectorXd::Zero(features.cols());
  const double ybar = response.mean();
  if (!cols.empty()) {
    Eigen::MatrixXd xs(features.rows(), static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) xs.col(a) = features.values.col(cols[a]);
    const Eigen::RowVectorXd means = xs.colwise().mean();
    xs.rowwise() -= means;
    const OlsResult r = ols(xs, response.array() - ybar);
    for (std::size_t a = 0; a < cols.size(); ++a) sol.coefficients(cols[a]) = r.coefficients(a);
    sol.rank_deficient = r.rank_deficient;
    sol.intercept = ybar - means.dot(r.coefficients);
  } else {
    sol.intercept = ybar;
  }
  const Eigen::VectorXd zero_w = Eigen::VectorXd::Zero(features.cols());
  return finish_fit(features, response, std::move(sol), 0.0, zero_w);
}

double kkt_violation(const FeatureMatrix& features,
                     const Eigen::Ref<const Eigen::VectorXd>& response, const LassoFit& fit,
                     double lambda, const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double n = static_cast<double>(response.size());
  const Eigen::VectorXd r = (response - features.values * fit.coefficients).array() - fit.intercept;
  const Eigen::VectorXd grad = 2.0 * (features.values.transpose() * r) / n;
  double worst = 0.0;
  for (Index j = 0; j < features.cols(); ++j) {
    if (features.intercept_column && *features.intercept_column == j) continue;
    const double pen = lambda / n * weights(j);
    const double b = fit.coefficients(j);
    const double v = b != 0.0 ? std::abs(grad(j) - pen * (b > 0 ? 1.0 : -1.0))
                              : std::max(std::abs(grad(j)) - pen, 0.0);
    worst = std::max(worst, v);
  }
  // Intercept stationarity: residuals must sum to zero.
  worst = std::max(worst, std::abs(2.0 * r.sum() / n));
  return worst;
}

}  // namespace twlasso
