// Acceptance checks. Prints one PASS/FAIL line per criterion; arguments
// select a subset by number.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "twlasso/cli.hpp"
#include "twlasso/dml.hpp"
#include "twlasso/lasso.hpp"
#include "twlasso/mundlak.hpp"
#include "twlasso/penalty.hpp"
#include "twlasso/sim.hpp"

using namespace twlasso;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const McRow& row_of(const McReport& r, FirstStage m, bool crossfit) {
  for (const McRow& row : r.rows)
    if (row.method.method == m && row.method.crossfit == crossfit) return row;
  throw std::runtime_error("missing report row");
}

std::string describe(const McRow& r) {
  return fmt("%s bias=%.3f sd=%.3f rmse=%.4f chs=%.1f dka=%.1f fail=%lld", method_label(r.method).c_str(),
             r.bias, r.sd, r.rmse, r.coverage_chs, r.coverage_dka, static_cast<long long>(r.n_failures));
}

DgpConfig design(Index p, bool iid) {
  DgpConfig c;
  c.n_units = 25;
  c.n_periods = 25;
  c.p = p;
  c.iid_mode = iid;
  c.seed = 1;
  return c;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& x) {
  const double n = double(x.size());
  MeanSe out;
  for (double v : x) out.mean += v / n;
  double ss = 0.0;
  for (double v : x) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

Outcome criterion1() {
  const McReport r =
      run_monte_carlo(design(200, false), {{FirstStage::tw_lasso, false}, {FirstStage::tw_lasso, true}}, 300);
  const McRow& nc = row_of(r, FirstStage::tw_lasso, false);
  const McRow& cf = row_of(r, FirstStage::tw_lasso, true);
  const bool a = std::abs(nc.bias - 0.041) <= 0.03 && nc.sd >= 0.08 && nc.sd <= 0.14 &&
                 nc.coverage_dka >= 82.0 && nc.coverage_dka <= 93.0;
  const bool b = std::abs(cf.bias) <= 0.04 && cf.coverage_dka >= 94.0 && cf.coverage_dka <= 100.0;
  return {a && b, describe(nc) + "; " + describe(cf)};
}

// POLS enters without cross-fitting only: with p = 600 the auxiliary samples
// have fewer rows than columns.
Outcome criterion2() {
  const McReport r = run_monte_carlo(design(600, false),
                                     {{FirstStage::pols, false},
                                      {FirstStage::tw_lasso, false},
                                      {FirstStage::tw_lasso, true}},
                                     200);
  const McRow& pols = row_of(r, FirstStage::pols, false);
  const McRow& tw = row_of(r, FirstStage::tw_lasso, false);
  const McRow& tw_cf = row_of(r, FirstStage::tw_lasso, true);
  const bool ok = tw.rmse < pols.rmse && pols.coverage_dka < 55.0 && tw_cf.coverage_dka >= 92.0;
  std::string d;
  for (const McRow& row : r.rows) d += (d.empty() ? "" : "; ") + describe(row);
  return {ok, d};
}

Outcome criterion3() {
  const McReport r =
      run_monte_carlo(design(600, true), {{FirstStage::h_lasso, false}, {FirstStage::tw_lasso, false}}, 200);
  bool ok = true;
  std::string d;
  for (const McRow& row : r.rows) {
    ok = ok && row.rmse <= 0.07 && row.coverage_dka >= 93.0;
    d += (d.empty() ? "" : "; ") + describe(row);
  }
  return {ok, d};
}

Outcome criterion4() {
  const int reps = 500;
  DgpConfig c = design(200, false);
  const double gamma = default_gamma(25, 25);
  const double lambda = penalty_level(25, 25, 200, 2.0, gamma, false);
  const Index h = static_cast<Index>(std::lround(std::pow(25.0, 0.2))) + 1;
  int holds = 0;
  double worst = 0.0;
  for (int r = 0; r < reps; ++r) {
    c.seed = 1 + static_cast<std::uint64_t>(r);
    const SimDataset s = generate(c);
    const InfeasibleWeights w = infeasible_weights(true_components(s, c), h);
    const RegularizationCheck ev = regularization_event(true_scores(s), w.weights, lambda, 2.0);
    holds += ev.holds ? 1 : 0;
    worst = std::max(worst, ev.max_statistic / ev.threshold);
  }
  const double freq = 100.0 * holds / reps;
  return {freq >= 90.0, fmt("event held in %.1f%% of %d reps (h=%lld, lambda=%.3f, worst ratio %.3f)", freq, reps,
                            static_cast<long long>(h), lambda, worst)};
}

Outcome criterion5() {
  const int reps = 500;
  const Index n = 100, t = 100;
  // iid scores with unit variance.
  std::vector<double> combined, e_part, excess;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int r = 0; r < reps; ++r) {
    PanelScores s;
    s.n_units = n;
    s.n_periods = t;
    s.values.resize(n * t, 1);
    for (Index k = 0; k < n * t; ++k) s.values(k, 0) = nd(gen);
    const PenaltyPlan plan = feasible_weights(s, column_bandwidths(s));
    combined.push_back(double(t) * plan.weights(0) * plan.weights(0));
    e_part.push_back(double(t) * plan.omega2_e(0));
    excess.push_back(double(t) * (std::max(plan.omega2_a(0) - plan.omega2_e(0), 0.0) +
                                  std::max(plan.omega2_g(0) - plan.omega2_e(0), 0.0)));
  }
  const MeanSe mc = mean_se(combined), me = mean_se(e_part), mx = mean_se(excess);
  const bool iid_ok = std::abs(mc.mean - 1.0) <= 3.0 * mc.se;

  // Non-degenerate scores: true treatment-equation scores of the simulation
  // design, Var(a) = w1^4.
  DgpConfig c;
  c.n_units = n;
  c.n_periods = t;
  c.p = 1;
  std::vector<double> diff_a, diff_g;
  for (int r = 0; r < reps; ++r) {
    c.seed = 1000 + static_cast<std::uint64_t>(r);
    const SimDataset sim = generate(c);
    const PanelScores s = true_scores(sim);
    const PenaltyPlan plan = feasible_weights(s, column_bandwidths(s));
    diff_a.push_back(plan.omega2_a(0) - plan.omega2_e(0));
    diff_g.push_back(plan.omega2_g(0) - plan.omega2_e(0));
  }
  const double var_a = std::pow(c.weights[0], 4);
  // Long-run variance of the product of two independent AR(1)(0.5) paths.
  const double lrv_g = std::pow(c.weights[1], 4) * (1.0 + 0.25) / (1.0 - 0.25);
  const MeanSe ma = mean_se(diff_a), mg = mean_se(diff_g);
  const bool nd_ok = std::abs(ma.mean - var_a) <= 3.0 * ma.se;
  // Same design at N=T=200, reported only.
  c.n_units = c.n_periods = 200;
  std::vector<double> diff_a200;
  for (int r = 0; r < reps; ++r) {
    c.seed = 5000 + static_cast<std::uint64_t>(r);
    const PanelScores s = true_scores(generate(c));
    const PenaltyPlan plan = feasible_weights(s, column_bandwidths(s));
    diff_a200.push_back(plan.omega2_a(0) - plan.omega2_e(0));
  }
  const MeanSe m200 = mean_se(diff_a200);
  return {iid_ok && nd_ok,
          fmt("iid: mean T*w2=%.4f (se %.4f, target 1) [T*w2_e=%.4f se %.4f; T*excess=%.4f se %.4f]; "
              "non-degenerate: w2_a-w2_e=%.5f (se %.5f, target %.5f) [w2_g-w2_e=%.5f se %.5f, lrv %.5f; "
              "N=T=200: w2_a-w2_e=%.5f se %.5f]",
              mc.mean, mc.se, me.mean, me.se, mx.mean, mx.se, ma.mean, ma.se, var_a, mg.mean, mg.se, lrv_g,
              m200.mean, m200.se)};
}

Outcome criterion6() {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  int kkt_fail = 0;
  double kkt_worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Index n = 10 + rep % 190, p = 1 + (rep * 7) % 80;
    FeatureMatrix f;
    f.values.resize(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) f.values(i, j) = nd(gen);
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = f.values(i, 0) - 0.5 * f.values(i, p - 1) + nd(gen);
    Eigen::VectorXd w(p);
    for (Index j = 0; j < p; ++j) w(j) = 0.1 + unif(gen);
    const double lambda = std::sqrt(double(n)) * unif(gen) * 3.0;
    const LassoFit fit = solve_weighted_lasso(f, y, lambda, w, 1e-9);
    const double v = kkt_violation(f, y, fit, lambda, w);
    kkt_worst = std::max(kkt_worst, v);
    if (!fit.converged || !(v <= 1e-6)) ++kkt_fail;
  }

  double var_worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 1 + rep % 6, t = 1 + rep % 7;
    const int m = 1 + rep % 4;
    Eigen::MatrixXd psi(n, t), psi_a(n, t);
    for (Index i = 0; i < n; ++i)
      for (Index s = 0; s < t; ++s) {
        psi(i, s) = nd(gen);
        psi_a(i, s) = nd(gen) - 2.0;
      }
    const VarianceResult v = variance_fullsample(psi, psi_a, m);
    const oracle::Sums o = oracle::score_sums(psi, m);
    const double sc = 1.0 / (double(n) * t * t);
    var_worst = std::max({var_worst, std::abs(v.omega_a - sc * o.a), std::abs(v.omega_dk - sc * o.dk),
                          std::abs(v.omega_nw - sc * o.nw)});
  }

  double q_worst = 0.0;
  for (int k = 1; k < 10000; ++k) {
    const double q = k / 10000.0;
    q_worst = std::max(q_worst, std::abs(normal_quantile(q) - oracle::normal_quantile(q)));
  }
  for (double q : {1e-12, 1e-9, 1e-6, 1.0 - 1e-6})
    q_worst = std::max(q_worst, std::abs(normal_quantile(q) - oracle::normal_quantile(q)));

  double id_worst = 0.0;
  for (int m = 1; m <= 12; ++m)
    for (int lag = 0; lag <= 14; ++lag)
      id_worst = std::max(id_worst, std::abs(bartlett_lag(lag, m) - oracle::bartlett(lag, m)));
  for (int rep = 0; rep < 50; ++rep) {
    PanelScores s;
    s.n_units = 2 + rep % 5;
    s.n_periods = 2 + rep % 6;
    s.values.resize(s.n_units * s.n_periods, 3);
    for (Index k = 0; k < s.values.size(); ++k) s.values.data()[k] = nd(gen);
    const ComponentDecomposition d = decompose(s);
    for (Index i = 0; i < s.n_units; ++i)
      for (Index t = 0; t < s.n_periods; ++t)
        for (Index j = 0; j < 3; ++j) {
          const double v = s.values(i * s.n_periods + t, j);
          id_worst = std::max(id_worst, std::abs(d.a(i, j) + d.g(t, j) + d.e(i * s.n_periods + t, j) - v) /
                                            std::max(1.0, std::abs(v)));
        }
  }
  {
    PanelDataset data;
    data.n_units = 5;
    data.n_periods = 4;
    data.outcome = Eigen::MatrixXd::Random(5, 4);
    data.treatment = Eigen::MatrixXd::Random(5, 4);
    data.covariates = {Eigen::MatrixXd::Random(5, 4)};
    data.covariate_names = {"x1"};
    for (int i = 0; i < 5; ++i) data.unit_labels.push_back(std::to_string(i));
    for (int t = 0; t < 4; ++t) data.time_labels.push_back(t);
    const Dictionary lin = build_dictionary(data, 1);
    const Dictionary cub = build_dictionary(data, 3);
    for (std::size_t c = 0; c < cub.term_index.size(); ++c) {
      Eigen::VectorXd prod = Eigen::VectorXd::Ones(20);
      for (std::size_t j = 0; j < cub.term_index[c].size(); ++j)
        for (int r = 0; r < cub.term_index[c][j]; ++r) prod.array() *= lin.features.values.col(j).array();
      id_worst = std::max(id_worst, (prod - cub.features.values.col(c)).cwiseAbs().maxCoeff());
    }
  }
  const bool ok = kkt_fail == 0 && var_worst <= 1e-12 && q_worst <= 1e-9 && id_worst <= 1e-10;
  return {ok, fmt("KKT failures %d/1000 (worst %.2e); variance oracle worst %.2e; quantile worst %.2e; "
                  "identities worst %.2e",
                  kkt_fail, kkt_worst, var_worst, q_worst, id_worst)};
}

Outcome criterion7() {
  const Index c2 = dictionary_term_count(7, 2), c3 = dictionary_term_count(7, 3);
  const Index e2 = static_cast<Index>(monomial_exponents(7, 2).size());
  const Index e3 = static_cast<Index>(monomial_exponents(7, 3).size());
  return {c2 == 35 && c3 == 119 && e2 == 35 && e3 == 119,
          fmt("tau=2: %lld (enumerated %lld); tau=3: %lld (enumerated %lld)", static_cast<long long>(c2),
              static_cast<long long>(e2), static_cast<long long>(c3), static_cast<long long>(e3))};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "twlasso_acceptance";
  fs::create_directories(dir);
  auto simulate = [&](const std::string& name, const std::string& format, int threads) {
    const std::string out = (dir / name).string();
    const std::string th = std::to_string(threads);
    const std::vector<std::string> args{"twlasso", "simulate", "--set", "N=20", "--set", "T=16", "--set", "p=30",
                                        "--set", "reps=8", "--set", "methods=pols,c_lasso,tw_lasso", "--set",
                                        "crossfit=both", "--set", "K=2", "--set", "L=4", "--seed", "2024",
                                        "--format", format, "--threads", th, "--out", out};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    if (run_cli(static_cast<int>(argv.size()), argv.data(), o, e) != 0) throw std::runtime_error(e.str());
    return read_file(dir / name);
  };
  bool ok = true;
  std::string d;
  for (const std::string format : {"csv", "json"}) {
    const std::string a = simulate("a." + format, format, 1);
    const std::string b = simulate("b." + format, format, 1);
    const std::string p = simulate("p." + format, format, 4);
    const bool same = !a.empty() && a == b && a == p;
    ok = ok && same;
    d += (d.empty() ? "" : "; ") + format + (same ? " identical" : " differs") + " (" +
         std::to_string(a.size()) + " bytes)";
  }
  return {ok, d + "; serial x2 and 4 threads"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 Monte Carlo baseline (N=T=25, p=200, 300 reps)", criterion1},
      {"2 ordering against POLS (p=600, 200 reps)", criterion2},
      {"3 iid design (p=600, 200 reps)", criterion3},
      {"4 regularization event frequency (500 reps)", criterion4},
      {"5 weight limits (N=T=100, 500 reps)", criterion5},
      {"6 oracle equivalence suites", criterion6},
      {"7 dictionary counts", criterion7},
      {"8 report determinism", criterion8},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!pick.empty() && !pick.count(static_cast<int>(k + 1))) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s: %s [%.0fs]\n", o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
