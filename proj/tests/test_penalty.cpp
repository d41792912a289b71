#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "twlasso/errors.hpp"
#include "twlasso/penalty.hpp"

using namespace twlasso;

namespace {

// Builds PanelScores from p matrices, each N x T.
PanelScores scores_from(const std::vector<Eigen::MatrixXd>& cols) {
  PanelScores s;
  s.n_units = cols.front().rows();
  s.n_periods = cols.front().cols();
  s.values.resize(s.n_units * s.n_periods, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) s.values.col(j) = to_panel_vector(cols[j]);
  return s;
}

Eigen::MatrixXd random_matrix(Index n, Index t, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, t);
  for (Index i = 0; i < n; ++i)
    for (Index s = 0; s < t; ++s) m(i, s) = nd(gen);
  return m;
}

}  // namespace

TEST_CASE("decomposition of constant scores") {
  const PanelScores s = scores_from({Eigen::MatrixXd::Constant(3, 4, 2.5)});
  const ComponentDecomposition d = decompose(s);
  CHECK(d.a.isConstant(2.5, 1e-15));
  CHECK(d.g.isConstant(2.5, 1e-15));
  CHECK(d.e.isConstant(-2.5, 1e-15));
}

TEST_CASE("decomposition recovers an exact additive structure") {
  Eigen::VectorXd a(3), g(4);
  a << 1.0, -3.0, 2.0;
  g << 0.5, -0.25, 1.0, -1.25;
  Eigen::MatrixXd v(3, 4);
  for (Index i = 0; i < 3; ++i)
    for (Index t = 0; t < 4; ++t) v(i, t) = a(i) + g(t);
  const ComponentDecomposition d = decompose(scores_from({v}));
  CHECK((d.a.col(0) - a).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d.g.col(0) - g).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(d.e.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("decomposition reconstructs random scores") {
  std::mt19937_64 gen(21);
  const Eigen::MatrixXd v = random_matrix(3, 4, gen);
  const ComponentDecomposition d = decompose(scores_from({v}));
  for (Index i = 0; i < 3; ++i)
    for (Index t = 0; t < 4; ++t) {
      const double back = d.a(i, 0) + d.g(t, 0) + d.e(i * 4 + t, 0);
      CHECK(std::abs(back - v(i, t)) <= 1e-12 * std::max(1.0, std::abs(v(i, t))));
    }
}

TEST_CASE("decomposition rejects non-finite scores") {
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(2, 4);
  v(1, 2) = std::nan("");
  CHECK_THROWS_AS(decompose(scores_from({v})), InputError);
}

TEST_CASE("Bartlett kernel values") {
  CHECK(bartlett_lag(0, 4) == 1.0);
  CHECK(bartlett_lag(4, 4) == 0.0);
  CHECK(bartlett_lag(2, 4) == 0.5);
  CHECK(bartlett_lag(7, 4) == 0.0);
}

TEST_CASE("single cell feasible weights") {
  const PanelScores s = scores_from({Eigen::MatrixXd::Constant(1, 1, 1.7)});
  const PenaltyPlan plan = feasible_weights(s, 1);
  const double v2 = 1.7 * 1.7;
  CHECK(plan.omega2_a(0) == doctest::Approx(v2).epsilon(1e-14));
  CHECK(plan.omega2_g(0) == doctest::Approx(v2).epsilon(1e-14));
  CHECK(plan.omega2_e(0) == doctest::Approx(v2).epsilon(1e-14));
  CHECK(plan.weights(0) * plan.weights(0) == doctest::Approx(v2).epsilon(1e-14));
}

TEST_CASE("feasible weights match the triple-loop oracle") {
  std::mt19937_64 gen(22);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 1 + rep % 6, t = 1 + (rep * 7) % 9;
    std::vector<Eigen::MatrixXd> cols{random_matrix(n, t, gen), random_matrix(n, t, gen)};
    // Add unit and period effects so both max() branches are exercised.
    for (Index i = 0; i < n; ++i) cols[0].row(i).array() += 0.3 * i;
    for (Index s = 0; s < t; ++s) cols[1].col(s).array() += 0.5 * (s % 3);
    for (int m : {1, 2, 3, 7}) {
      const PenaltyPlan plan = feasible_weights(scores_from(cols), m);
      for (Index j = 0; j < 2; ++j) {
        const oracle::Weights w = oracle::feasible(cols[j], m);
        CHECK(std::abs(plan.omega2_a(j) - w.a) < 1e-12);
        CHECK(std::abs(plan.omega2_g(j) - w.g) < 1e-12);
        CHECK(std::abs(plan.omega2_e(j) - w.e) < 1e-12);
        CHECK(std::abs(plan.weights(j) * plan.weights(j) - w.w2) < 1e-12);
      }
    }
  }
}

TEST_CASE("feasible weights on a 4 x 5 x 2 panel with M = 2") {
  std::mt19937_64 gen(23);
  std::vector<Eigen::MatrixXd> cols{random_matrix(4, 5, gen), random_matrix(4, 5, gen)};
  const PenaltyPlan plan = feasible_weights(scores_from(cols), 2);
  for (Index j = 0; j < 2; ++j) {
    const oracle::Weights w = oracle::feasible(cols[j], 2);
    CHECK(std::abs(plan.weights(j) * plan.weights(j) - w.w2) < 1e-12);
    // adjustment bounds
    CHECK(plan.weights(j) * plan.weights(j) >= plan.omega2_e(j) - 1e-15);
    CHECK(plan.weights(j) * plan.weights(j) <=
          plan.omega2_a(j) + plan.omega2_g(j) + plan.omega2_e(j) + 1e-15);
  }
}

TEST_CASE("bandwidth at or above T is flagged but computed") {
  std::mt19937_64 gen(24);
  const Eigen::MatrixXd v = random_matrix(3, 4, gen);
  const PenaltyPlan plan = feasible_weights(scores_from({v}), 6);
  CHECK_FALSE(plan.diagnostics.empty());
  CHECK(std::abs(plan.omega2_g(0) - oracle::feasible(v, 6).g) < 1e-12);
  CHECK_THROWS_AS(feasible_weights(scores_from({v}), 0), DomainError);
}

TEST_CASE("all-zero score column gets weight zero and a diagnostic") {
  std::mt19937_64 gen(25);
  const PenaltyPlan plan =
      feasible_weights(scores_from({random_matrix(3, 4, gen), Eigen::MatrixXd::Zero(3, 4)}), 2);
  CHECK(plan.weights(1) == 0.0);
  CHECK(plan.degenerate_columns == std::vector<Index>{1});
  PenaltyPlan filled = plan;
  CHECK(fill_degenerate_weights(filled));
  CHECK(filled.weights(1) == plan.weights(0));
}

TEST_CASE("fill reports failure when every weight is zero") {
  PenaltyPlan plan = feasible_weights(scores_from({Eigen::MatrixXd::Zero(2, 4)}), 1);
  CHECK_FALSE(fill_degenerate_weights(plan));
}

TEST_CASE("baseline weights") {
  std::mt19937_64 gen(26);
  const Eigen::MatrixXd v = random_matrix(5, 6, gen);
  const PanelScores s = scores_from({v});
  const PenaltyPlan het = baseline_weights(s, WeightVariant::heteroskedastic);
  CHECK(het.weights(0) * het.weights(0) == doctest::Approx(v.squaredNorm() / 30.0).epsilon(1e-13));
  const PenaltyPlan cl = baseline_weights(s, WeightVariant::cluster);
  CHECK(cl.weights(0) * cl.weights(0) == doctest::Approx(oracle::feasible(v, 1).a).epsilon(1e-13));
  CHECK_THROWS_AS(baseline_weights(s, WeightVariant::two_way), DomainError);

  // Scores constant in t within a unit.
  Eigen::MatrixXd c(3, 4);
  for (Index i = 0; i < 3; ++i) c.row(i).setConstant(1.0 + i);
  const PenaltyPlan cc = baseline_weights(scores_from({c}), WeightVariant::cluster);
  CHECK(cc.weights(0) * cc.weights(0) == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0).epsilon(1e-14));

  const PanelScores one = scores_from({Eigen::MatrixXd::Constant(1, 1, -2.0)});
  CHECK(baseline_weights(one, WeightVariant::heteroskedastic).weights(0) == doctest::Approx(2.0));
  CHECK(baseline_weights(one, WeightVariant::cluster).weights(0) == doctest::Approx(2.0));
}

TEST_CASE("heteroskedastic weights on iid scores approach the variance") {
  std::mt19937_64 gen(27);
  const double sigma2 = 2.25;
  const int reps = 200;
  std::vector<double> w2;
  for (int r = 0; r < reps; ++r) {
    const Eigen::MatrixXd v = random_matrix(40, 40, gen) * std::sqrt(sigma2);
    w2.push_back(std::pow(baseline_weights(scores_from({v}), WeightVariant::heteroskedastic).weights(0), 2));
  }
  double mean = 0, var = 0;
  for (double x : w2) mean += x / reps;
  for (double x : w2) var += (x - mean) * (x - mean) / (reps - 1);
  CHECK(std::abs(mean - sigma2) <= 3.0 * std::sqrt(var / reps));
}

TEST_CASE("penalty level") {
  const double gamma = 0.1 / std::log(25.0);
  const double lambda = penalty_level(25, 25, 200, 2.0, gamma, false);
  CHECK(std::abs(lambda - 500.0 * oracle::normal_quantile(1.0 - gamma / 400.0)) < 1e-6);
  CHECK(std::abs(lambda - 1891.191802531412) < 1e-6);
  CHECK(default_gamma(25, 25) == doctest::Approx(gamma).epsilon(1e-15));
  CHECK(default_gamma(10, 30, 0.2) == doctest::Approx(0.2 / std::log(30.0)).epsilon(1e-15));

  const double deg = penalty_level(25, 25, 200, 2.0, gamma, true);
  CHECK(std::abs(deg - 2.0 * 2.0 * std::sqrt(625.0) * oracle::normal_quantile(1.0 - gamma / 400.0)) < 1e-6);
  CHECK(std::abs(penalty_level(9, 16, 3, 1.1, 0.05, false) -
                 2.0 * 1.1 * 3.0 * 16.0 * oracle::normal_quantile(1.0 - 0.05 / 6.0)) < 1e-8);

  CHECK_THROWS_AS(penalty_level(10, 10, 0, 2.0, 0.05, false), DomainError);
  CHECK_THROWS_AS(penalty_level(10, 10, 5, 2.0, 1.5, false), DomainError);
  CHECK_THROWS_AS(penalty_level(10, 10, 5, 0.5, 0.05, false), DomainError);
}

TEST_CASE("infeasible weights") {
  ComponentDecomposition zero;
  zero.n_units = 3;
  zero.n_periods = 4;
  zero.a = Eigen::MatrixXd::Zero(3, 2);
  zero.g = Eigen::MatrixXd::Zero(4, 2);
  zero.e = Eigen::MatrixXd::Zero(12, 2);
  CHECK(infeasible_weights(zero, 2).weights.isZero(0.0));

  ComponentDecomposition ao = zero;
  ao.a.col(0) << 1.0, 2.0, -2.0;
  const InfeasibleWeights wa = infeasible_weights(ao, 2);
  CHECK(wa.weights(0) * wa.weights(0) == doctest::Approx(3.0).epsilon(1e-14));

  std::mt19937_64 gen(28);
  const Index n = 3, t = 4, h = 2;
  ComponentDecomposition c = zero;
  c.a = random_matrix(n, 2, gen);
  c.g = random_matrix(t, 2, gen);
  c.e = random_matrix(n * t, 2, gen);
  const InfeasibleWeights w = infeasible_weights(c, h);
  CHECK_FALSE(w.truncated);
  for (Index j = 0; j < 2; ++j) {
    double a2 = 0, g2 = 0, e2 = 0;
    for (Index i = 0; i < n; ++i) a2 += c.a(i, j) * c.a(i, j) / n;
    for (Index b = 0; b < t / h; ++b) {
      double s = 0;
      for (Index k = 0; k < h; ++k) s += c.g(b * h + k, j);
      g2 += double(n) / double(t * t) * s * s;
    }
    for (Index i = 0; i < n; ++i) {
      double s = 0;
      for (Index k = 0; k < t; ++k) s += c.e(i * t + k, j);
      e2 += s * s / double(n * t * t);
    }
    CHECK(std::abs(w.weights(j) * w.weights(j) - (a2 + g2 + e2)) < 1e-12);
  }
  CHECK(infeasible_weights(c, 3).truncated);
  CHECK_THROWS_AS(infeasible_weights(c, 5), DomainError);
  CHECK_THROWS_AS(infeasible_weights(c, 0), DomainError);
}

TEST_CASE("regularization event statistic") {
  Eigen::MatrixXd v(2, 4);
  v << 1, 2, 3, 4, -1, 0, 0, 1;
  const PanelScores s = scores_from({v, -2.0 * v});
  Eigen::VectorXd w(2);
  w << 1.0, 4.0;
  const RegularizationCheck ev = regularization_event(s, w, 40.0, 2.0);
  CHECK(ev.max_statistic == doctest::Approx(10.0));
  CHECK(ev.threshold == doctest::Approx(10.0));
  CHECK(ev.holds);
  CHECK_FALSE(regularization_event(s, w, 39.0, 2.0).holds);
}

namespace {

FeatureMatrix panel_features(Index n, Index t, Index p, std::mt19937_64& gen) {
  FeatureMatrix f;
  f.values = random_matrix(n * t, p, gen);
  f.n_units = n;
  f.n_periods = t;
  for (Index j = 0; j < p; ++j) f.column_names.push_back("x" + std::to_string(j + 1));
  return f;
}

}  // namespace

TEST_CASE("iterative LASSO keeps a strong regressor in a noiseless response") {
  std::mt19937_64 gen(29);
  const FeatureMatrix f = panel_features(20, 20, 10, gen);
  const Eigen::VectorXd y = f.values.col(3);
  const PanelLassoResult r = iterate_two_way_lasso(f, y);
  CHECK(std::find(r.fit.selected.begin(), r.fit.selected.end(), 3) != r.fit.selected.end());
  CHECK(r.refinements >= 2);
  CHECK(r.refinements <= 10);
}

TEST_CASE("iterative LASSO selects nothing on pure noise") {
  std::vector<std::size_t> sizes;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(1000 + seed);
    const FeatureMatrix f = panel_features(10, 10, 20, gen);
    std::normal_distribution<double> nd;
    Eigen::VectorXd y(100);
    for (Index k = 0; k < 100; ++k) y(k) = nd(gen);
    PanelLassoConfig cfg;
    cfg.c_lambda = 4.0;
    sizes.push_back(iterate_two_way_lasso(f, y, cfg).fit.selected.size());
  }
  std::nth_element(sizes.begin(), sizes.begin() + 50, sizes.end());
  CHECK(sizes[50] == 0);
}

TEST_CASE("iterative LASSO is deterministic") {
  std::mt19937_64 g1(30), g2(30);
  const FeatureMatrix f1 = panel_features(12, 8, 15, g1);
  const FeatureMatrix f2 = panel_features(12, 8, 15, g2);
  Eigen::VectorXd y = f1.values.col(0) - 0.5 * f1.values.col(4);
  y.array() += 0.3 * f1.values.col(9).array().square();
  const PanelLassoResult a = iterate_two_way_lasso(f1, y);
  const PanelLassoResult b = iterate_two_way_lasso(f2, y);
  CHECK(a.fit.selected == b.fit.selected);
  CHECK((a.fit.coefficients.array() == b.fit.coefficients.array()).all());
  CHECK((a.plan.weights.array() == b.plan.weights.array()).all());
  CHECK(a.refinements == b.refinements);
}

TEST_CASE("iterative LASSO variants and validation") {
  std::mt19937_64 gen(31);
  const FeatureMatrix f = panel_features(10, 6, 5, gen);
  const Eigen::VectorXd y = 2.0 * f.values.col(1);
  for (WeightVariant v : {WeightVariant::cluster, WeightVariant::heteroskedastic}) {
    PanelLassoConfig cfg;
    cfg.variant = v;
    const PanelLassoResult r = iterate_two_way_lasso(f, y, cfg);
    CHECK(r.plan.variant == v);
    CHECK(std::find(r.fit.selected.begin(), r.fit.selected.end(), 1) != r.fit.selected.end());
  }
  PanelLassoConfig bad;
  bad.variant = WeightVariant::initial;
  CHECK_THROWS_AS(iterate_two_way_lasso(f, y, bad), DomainError);
  FeatureMatrix flat = f;
  flat.n_periods = 0;
  CHECK_THROWS(iterate_two_way_lasso(flat, y));
}
