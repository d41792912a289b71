#include <doctest.h>

#include <cmath>

#include "twlasso/errors.hpp"
#include "twlasso/sim.hpp"

using namespace twlasso;

namespace {

DgpConfig small_config(Index n = 12, Index t = 12, Index p = 10) {
  DgpConfig c;
  c.n_units = n;
  c.n_periods = t;
  c.p = p;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_CASE("covariate variance is one third") {
  DgpConfig c = small_config(50, 50, 2);
  const int reps = 100;
  std::vector<double> m2;
  for (int r = 0; r < reps; ++r) {
    c.seed = 500 + r;
    const SimDataset s = generate(c);
    m2.push_back(s.data.covariates[0].array().square().mean());
  }
  double mean = 0, var = 0;
  for (double x : m2) mean += x / reps;
  for (double x : m2) var += (x - mean) * (x - mean) / (reps - 1);
  CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * std::sqrt(var / reps));
}

TEST_CASE("unit components have Toeplitz correlation") {
  DgpConfig c = small_config(2000, 4, 4);
  const SimDataset s = generate(c);
  const Eigen::MatrixXd& a = s.truth.x_unit;
  const double n = double(a.rows());
  for (Index j = 0; j < 4; ++j) {
    for (Index k = j + 1; k < 4; ++k) {
      const Eigen::VectorXd x = a.col(j).array() - a.col(j).mean();
      const Eigen::VectorXd y = a.col(k).array() - a.col(k).mean();
      const double r = x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
      const double rho = std::pow(0.5, double(k - j));
      CHECK(std::abs(r - rho) <= 3.0 * (1.0 - rho * rho) / std::sqrt(n));
    }
  }
}

TEST_CASE("datasets are reproducible from the seed") {
  const DgpConfig c = small_config();
  const SimDataset a = generate(c);
  const SimDataset b = generate(c);
  CHECK((a.data.outcome.array() == b.data.outcome.array()).all());
  CHECK((a.data.covariates[7].array() == b.data.covariates[7].array()).all());
  DgpConfig d = c;
  d.seed = 78;
  CHECK_FALSE((generate(d).data.outcome.array() == a.data.outcome.array()).all());
}

TEST_CASE("generated panel follows the structural equations") {
  const DgpConfig c = small_config();
  const SimDataset s = generate(c);
  for (Index j = 0; j < c.p; ++j) CHECK(s.truth.beta0(j) == doctest::Approx(1.0 / double((j + 1) * (j + 1))));
  const FeatureMatrix f = sim_dictionary(s.data);
  const Eigen::VectorXd d = f.values * s.truth.pi0 + s.truth.v;
  const Eigen::VectorXd y = d * c.theta0 + f.values * s.truth.beta0 + s.truth.u;
  CHECK((d - to_panel_vector(s.data.treatment)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((y - to_panel_vector(s.data.outcome)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("true components reconstruct the true scores") {
  for (bool iid : {false, true}) {
    DgpConfig c = small_config();
    c.iid_mode = iid;
    const SimDataset s = generate(c);
    const PanelScores sc = true_scores(s);
    const ComponentDecomposition cd = true_components(s, c);
    for (Index i = 0; i < c.n_units; ++i)
      for (Index t = 0; t < c.n_periods; ++t) {
        const Eigen::RowVectorXd back = cd.a.row(i) + cd.g.row(t) + cd.e.row(i * c.n_periods + t);
        CHECK((back - sc.values.row(i * c.n_periods + t)).cwiseAbs().maxCoeff() < 1e-12);
      }
    if (iid) CHECK(cd.a.isZero(0.0));
  }
}

TEST_CASE("configuration validation") {
  DgpConfig c = small_config();
  c.weights = {-0.1, 0.5, 0.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.ar_coef = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(run_monte_carlo(small_config(), {}, 3), ConfigError);
}

TEST_CASE("summary statistics") {
  std::vector<ReplicationOutcome> o(4);
  const double th[] = {1.1, 0.9, 1.3, 0.7};
  for (int r = 0; r < 4; ++r) {
    o[r].ok = true;
    o[r].theta = th[r];
    o[r].se_chs = 0.1;
    o[r].se_dka = 0.2;
    o[r].selected = r;
  }
  o[3].se_chs = std::nan("");
  ReplicationOutcome failed;
  o.push_back(failed);
  const McRow row = summarize({}, o, 1.0);
  CHECK(row.n_reps == 5);
  CHECK(row.n_failures == 1);
  CHECK(row.bias == doctest::Approx(0.0));
  CHECK(row.sd == doctest::Approx(std::sqrt(0.2 / 4.0)));
  CHECK(std::abs(row.rmse * row.rmse - (row.bias * row.bias + row.sd * row.sd)) <= 1e-10 * row.rmse * row.rmse);
  CHECK(row.coverage_chs == doctest::Approx(50.0));
  CHECK(row.coverage_dka == doctest::Approx(100.0));
  CHECK(row.mean_selected == doctest::Approx(1.5));

  const McRow bad = summarize({}, {failed, failed}, 1.0);
  CHECK_FALSE(bad.valid);
  CHECK(bad.n_failures == 2);
}

TEST_CASE("rmse identity holds on a real run") {
  const McReport rep = run_monte_carlo(small_config(), {{FirstStage::pols, false}, {FirstStage::tw_lasso, true}}, 5);
  for (const McRow& r : rep.rows) {
    CHECK(std::abs(r.rmse * r.rmse - (r.bias * r.bias + r.sd * r.sd)) <= 1e-10 * std::max(r.rmse * r.rmse, 1e-300));
    CHECK(r.coverage_dka >= 0.0);
    CHECK(r.coverage_dka <= 100.0);
  }
}

TEST_CASE("zero outcome noise gives zero bias and spread") {
  DgpConfig c = small_config();
  c.u_scale = 0.0;
  const McReport rep = run_monte_carlo(c, {{FirstStage::pols, false}, {FirstStage::pols, true}}, 4);
  for (const McRow& r : rep.rows) {
    CHECK(r.valid);
    CHECK(std::abs(r.bias) < 1e-8);
    CHECK(r.sd < 1e-8);
    CHECK(r.coverage_dka >= 0.0);
    CHECK(r.coverage_dka <= 100.0);
  }
  CHECK_FALSE(rep.to_csv().empty());
}

TEST_CASE("method order within a replication does not matter") {
  const DgpConfig c = small_config();
  const std::vector<MethodSpec> ab{{FirstStage::tw_lasso, false}, {FirstStage::c_lasso, true}, {FirstStage::pols, false}};
  const std::vector<MethodSpec> ba{ab[2], ab[1], ab[0]};
  const auto x = run_replication(c, ab, 3, {});
  const auto y = run_replication(c, ba, 3, {});
  for (int m = 0; m < 3; ++m) {
    CHECK(x[m].ok == y[2 - m].ok);
    CHECK(x[m].theta == y[2 - m].theta);
    CHECK(x[m].se_dka == y[2 - m].se_dka);
  }
}

TEST_CASE("reports are reproducible and independent of the thread count") {
  const DgpConfig c = small_config();
  const std::vector<MethodSpec> m{{FirstStage::tw_lasso, false}, {FirstStage::tw_lasso, true}};
  EstimationSettings serial;
  EstimationSettings parallel;
  parallel.threads = 3;
  const McReport a = run_monte_carlo(c, m, 6, serial);
  const McReport b = run_monte_carlo(c, m, 6, serial);
  const McReport p = run_monte_carlo(c, m, 6, parallel);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_json() == p.to_json());
  CHECK(a.to_csv() == p.to_csv());
  CHECK(a.to_csv().rfind("method,crossfit,bias,sd,rmse,coverage_chs,coverage_dka,mean_selected,n_reps,n_failures,valid", 0) == 0);
  CHECK(a.to_table().find("tw_lasso") != std::string::npos);
}
