#include "twlasso/sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "twlasso/crossfit.hpp"
#include "twlasso/errors.hpp"

namespace twlasso {

void DgpConfig::validate() const {
  if (n_units < 1 || n_periods < 1 || p < 1) throw ConfigError("dgp: N, T and p must be positive");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("dgp: component weights must be nonnegative");
  }
  if (!(std::abs(ar_coef) < 1.0)) throw ConfigError("dgp: |ar_coef| must be below 1");
  if (!(ar_init_var >= 0.0) || !(ar_innovation_var >= 0.0)) {
    throw ConfigError("dgp: AR(1) variances must be nonnegative");
  }
  if (!(std::abs(toeplitz_base) < 1.0)) throw ConfigError("dgp: |toeplitz_base| must be below 1");
  if (!std::isfinite(theta0) || !std::isfinite(u_scale) || !std::isfinite(v_scale)) {
    throw ConfigError("dgp: theta0 and noise scales must be finite");
  }
}

namespace {

enum Stream : std::uint64_t {
  kXUnit = 1,
  kXPeriod,
  kXCell,
  kUUnit,
  kVUnit,
  kUPeriod,
  kVPeriod,
  kUCell,
  kVCell,
};

Eigen::VectorXd ar1_path(Index t_count, const DgpConfig& c, RngStream& rng) {
  Eigen::VectorXd g(t_count);
  const double init_sd = std::sqrt(c.ar_init_var);
  const double innov_sd = std::sqrt(c.ar_innovation_var);
  for (Index t = 0; t < t_count; ++t) {
    g(t) = t == 0 ? init_sd * rng.normal() : c.ar_coef * g(t - 1) + innov_sd * rng.normal();
  }
  return g;
}

Eigen::VectorXd normals(Index n, RngStream& rng) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

SimDataset generate(const DgpConfig& c) {
  c.validate();
  const Index n = c.n_units;
  const Index tc = c.n_periods;
  const Index p = c.p;
  const Index nt = n * tc;
  const auto [w1, w2, w3] = c.weights;
  const RngStream root(c.seed, 0);

  SimDataset sim;
  DgpTruth& tr = sim.truth;
  tr.theta0 = c.theta0;
  tr.beta0.resize(p);
  for (Index j = 0; j < p; ++j) tr.beta0(j) = 1.0 / static_cast<double>((j + 1) * (j + 1));
  tr.pi0 = tr.beta0;

  Eigen::MatrixXd x(nt, p);
  if (!c.iid_mode) {
    RngStream ra = root.substream(kXUnit);
    RngStream rg = root.substream(kXPeriod);
    RngStream re = root.substream(kXCell);
    tr.x_unit.resize(n, p);
    for (Index i = 0; i < n; ++i) tr.x_unit.row(i) = toeplitz_gaussian(p, c.toeplitz_base, ra).transpose();
    tr.x_period.resize(tc, p);
    for (Index j = 0; j < p; ++j) tr.x_period.col(j) = ar1_path(tc, c, rg);
    tr.x_cell.resize(nt, p);
    for (Index r = 0; r < nt; ++r) tr.x_cell.row(r) = toeplitz_gaussian(p, c.toeplitz_base, re).transpose();

    RngStream rua = root.substream(kUUnit), rva = root.substream(kVUnit);
    RngStream rug = root.substream(kUPeriod), rvg = root.substream(kVPeriod);
    RngStream rue = root.substream(kUCell), rve = root.substream(kVCell);
    tr.u_unit = normals(n, rua);
    tr.v_unit = normals(n, rva);
    tr.u_period = ar1_path(tc, c, rug);
    tr.v_period = ar1_path(tc, c, rvg);
    tr.u_cell = normals(nt, rue);
    tr.v_cell = normals(nt, rve);

    tr.u.resize(nt);
    tr.v.resize(nt);
    for (Index i = 0; i < n; ++i) {
      for (Index t = 0; t < tc; ++t) {
        const Index r = i * tc + t;
        x.row(r) = w1 * tr.x_unit.row(i) + w2 * tr.x_period.row(t) + w3 * tr.x_cell.row(r);
        tr.u(r) = c.u_scale * (w1 * tr.u_unit(i) + w2 * tr.u_period(t) + w3 * tr.u_cell(r));
        tr.v(r) = c.v_scale * (w1 * tr.v_unit(i) + w2 * tr.v_period(t) + w3 * tr.v_cell(r));
      }
    }
  } else {
    // Every component redrawn per cell: no unit or period dependence.
    RngStream ra = root.substream(kXUnit);
    RngStream rg = root.substream(kXPeriod);
    RngStream re = root.substream(kXCell);
    for (Index r = 0; r < nt; ++r) {
      const Eigen::VectorXd a = toeplitz_gaussian(p, c.toeplitz_base, ra);
      const Eigen::VectorXd g = normals(p, rg);
      const Eigen::VectorXd e = toeplitz_gaussian(p, c.toeplitz_base, re);
      x.row(r) = (w1 * a + w2 * g + w3 * e).transpose();
    }
    tr.x_cell = x;
    RngStream rua = root.substream(kUUnit), rva = root.substream(kVUnit);
    RngStream rug = root.substream(kUPeriod), rvg = root.substream(kVPeriod);
    RngStream rue = root.substream(kUCell), rve = root.substream(kVCell);
    const Eigen::VectorXd ua = normals(nt, rua), va = normals(nt, rva);
    const Eigen::VectorXd ug = normals(nt, rug), vg = normals(nt, rvg);
    const Eigen::VectorXd ue = normals(nt, rue), ve = normals(nt, rve);
    tr.u_cell = c.u_scale * (w1 * ua + w2 * ug + w3 * ue);
    tr.v_cell = c.v_scale * (w1 * va + w2 * vg + w3 * ve);
    tr.u = tr.u_cell;
    tr.v = tr.v_cell;
  }

  const Eigen::VectorXd d = x * tr.pi0 + tr.v;
  const Eigen::VectorXd y = d * c.theta0 + x * tr.beta0 + tr.u;

  PanelDataset& data = sim.data;
  data.n_units = n;
  data.n_periods = tc;
  data.outcome = from_panel_vector(y, n, tc);
  data.treatment = from_panel_vector(d, n, tc);
  data.covariates.reserve(p);
  for (Index j = 0; j < p; ++j) {
    data.covariates.push_back(from_panel_vector(x.col(j), n, tc));
    data.covariate_names.push_back("x" + std::to_string(j + 1));
  }
  for (Index i = 0; i < n; ++i) data.unit_labels.push_back(std::to_string(i + 1));
  for (Index t = 0; t < tc; ++t) data.time_labels.push_back(static_cast<double>(t + 1));
  return sim;
}

FeatureMatrix sim_dictionary(const PanelDataset& data) { return flatten(data); }

PanelScores true_scores(const SimDataset& sim) {
  const FeatureMatrix f = flatten(sim.data);
  return PanelScores::from_residuals(f.values, sim.truth.v, sim.data.n_units, sim.data.n_periods);
}

ComponentDecomposition true_components(const SimDataset& sim, const DgpConfig& c) {
  const PanelScores scores = true_scores(sim);
  const Index n = sim.data.n_units;
  const Index tc = sim.data.n_periods;
  const Index p = scores.cols();
  const DgpTruth& tr = sim.truth;
  ComponentDecomposition out;
  out.n_units = n;
  out.n_periods = tc;
  out.a = Eigen::MatrixXd::Zero(n, p);
  out.g = Eigen::MatrixXd::Zero(tc, p);
  if (!c.iid_mode) {
    const double w1 = c.weights[0], w2 = c.weights[1];
    for (Index i = 0; i < n; ++i) out.a.row(i) = c.v_scale * w1 * w1 * tr.v_unit(i) * tr.x_unit.row(i);
    for (Index t = 0; t < tc; ++t) out.g.row(t) = c.v_scale * w2 * w2 * tr.v_period(t) * tr.x_period.row(t);
  }
  out.e = scores.values;
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < tc; ++t) out.e.row(i * tc + t) -= out.a.row(i) + out.g.row(t);
  }
  return out;
}

std::string method_label(const MethodSpec& m) {
  return std::string(to_string(m.method)) + (m.crossfit ? "+crossfit" : "");
}

std::vector<ReplicationOutcome> run_replication(const DgpConfig& config,
                                                const std::vector<MethodSpec>& methods,
                                                Index replication,
                                                const EstimationSettings& s) {
  DgpConfig c = config;
  c.seed = config.seed + static_cast<std::uint64_t>(replication);
  const SimDataset sim = generate(c);
  const FeatureMatrix dict = sim_dictionary(sim.data);
  std::optional<CrossFitPlan> plan;
  for (const MethodSpec& m : methods) {
    if (m.crossfit && !plan) plan = make_plan(c.n_units, c.n_periods, s.K, s.L, c.seed);
  }

  std::vector<ReplicationOutcome> out;
  for (const MethodSpec& m : methods) {
    DmlConfig dc;
    dc.first_stage = m.method;
    dc.lasso.c_lambda = s.c_lambda;
    dc.lasso.gamma = s.gamma;
    dc.lasso.alpha = s.alpha;
    dc.lasso.max_refinements = s.max_refinements;
    dc.lasso.bandwidth = s.weight_bandwidth;
    dc.bandwidth = s.bandwidth;
    dc.max_selected_fraction = s.max_selected_fraction;
    ReplicationOutcome o;
    try {
      const DmlEstimate est = m.crossfit ? estimate_crossfit(sim.data, dict, *plan, dc)
                                         : estimate_fullsample(sim.data, dict, dc);
      o.ok = std::isfinite(est.theta);
      o.theta = est.theta;
      o.se_chs = est.se_chs;
      o.se_dka = est.se_dka;
      double sel = 0.0;
      for (const auto& sc : est.selected_counts) sel += static_cast<double>(sc[2]);
      o.selected = sel / static_cast<double>(est.selected_counts.size());
      if (!o.ok) o.error = "non-finite estimate";
    } catch (const Error& e) {
      o.ok = false;
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

McRow summarize(const MethodSpec& method, const std::vector<ReplicationOutcome>& outcomes,
                double theta0) {
  McRow row;
  row.method = method;
  row.n_reps = static_cast<Index>(outcomes.size());
  double count = 0.0, sum = 0.0, sum_sel = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++row.n_failures;
      continue;
    }
    count += 1.0;
    sum += o.theta;
    sum_sel += o.selected;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (count == 0.0) {
    row.valid = false;
    row.bias = row.sd = row.rmse = row.coverage_chs = row.coverage_dka = row.mean_selected = nan;
    return row;
  }
  const double mean = sum / count;
  double ss = 0.0, se2 = 0.0, cover_chs = 0.0, cover_dka = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    ss += (o.theta - mean) * (o.theta - mean);
    se2 += (o.theta - theta0) * (o.theta - theta0);
    const double err = std::abs(o.theta - theta0);
    if (std::isfinite(o.se_chs) && err <= kZ975 * o.se_chs) cover_chs += 1.0;
    if (std::isfinite(o.se_dka) && err <= kZ975 * o.se_dka) cover_dka += 1.0;
  }
  row.bias = mean - theta0;
  row.sd = std::sqrt(ss / count);
  row.rmse = std::sqrt(se2 / count);
  row.coverage_chs = 100.0 * cover_chs / count;
  row.coverage_dka = 100.0 * cover_dka / count;
  row.mean_selected = sum_sel / count;
  return row;
}

McReport run_monte_carlo(const DgpConfig& config, const std::vector<MethodSpec>& methods,
                         Index n_reps, const EstimationSettings& settings) {
  if (methods.empty()) throw ConfigError("run_monte_carlo: no methods requested");
  if (n_reps < 1) throw ConfigError("run_monte_carlo: n_reps must be positive");
  config.validate();
  for (const MethodSpec& m : methods) {
    if (m.method == FirstStage::oracle) throw ConfigError("run_monte_carlo: oracle first stage not supported");
    if (m.crossfit) make_plan(config.n_units, config.n_periods, settings.K, settings.L, 0);
  }

  std::vector<std::vector<ReplicationOutcome>> results(static_cast<std::size_t>(n_reps));
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const Index r = next.fetch_add(1);
      if (r >= n_reps) return;
      try {
        results[static_cast<std::size_t>(r)] = run_replication(config, methods, r, settings);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_reps;
        return;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(settings.threads, static_cast<int>(n_reps)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  McReport report;
  report.dgp = config;
  report.settings = settings;
  report.n_reps = n_reps;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<ReplicationOutcome> column;
    column.reserve(results.size());
    for (const auto& rep : results) column.push_back(rep[m]);
    report.rows.push_back(summarize(methods[m], column, config.theta0));
  }
  return report;
}

namespace {

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string McReport::to_csv() const {
  std::string out =
      "method,crossfit,bias,sd,rmse,coverage_chs,coverage_dka,mean_selected,n_reps,n_failures,valid\n";
  for (const McRow& r : rows) {
    out += std::string(to_string(r.method.method)) + ',' + (r.method.crossfit ? "1" : "0") + ',' +
           fixed(r.bias, 6) + ',' + fixed(r.sd, 6) + ',' + fixed(r.rmse, 6) + ',' +
           fixed(r.coverage_chs, 2) + ',' + fixed(r.coverage_dka, 2) + ',' +
           fixed(r.mean_selected, 3) + ',' + std::to_string(r.n_reps) + ',' +
           std::to_string(r.n_failures) + ',' + (r.valid ? "1" : "0") + '\n';
  }
  return out;
}

std::string McReport::to_json(int indent) const {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["dgp"] = {{"N", dgp.n_units},
              {"T", dgp.n_periods},
              {"p", dgp.p},
              {"theta0", dgp.theta0},
              {"weights", dgp.weights},
              {"ar_coef", dgp.ar_coef},
              {"ar_init_var", dgp.ar_init_var},
              {"ar_innovation_var", dgp.ar_innovation_var},
              {"toeplitz_base", dgp.toeplitz_base},
              {"iid_mode", dgp.iid_mode},
              {"u_scale", dgp.u_scale},
              {"v_scale", dgp.v_scale},
              {"seed", dgp.seed}};
  j["estimation"] = {{"K", settings.K},
                     {"L", settings.L},
                     {"c_lambda", settings.c_lambda},
                     {"alpha", settings.alpha},
                     {"max_refinements", settings.max_refinements}};
  if (settings.gamma) j["estimation"]["gamma"] = *settings.gamma;
  j["n_reps"] = n_reps;
  json rs = json::array();
  for (const McRow& r : rows) {
    rs.push_back({{"method", to_string(r.method.method)},
                  {"crossfit", r.method.crossfit},
                  {"bias", num(r.bias)},
                  {"sd", num(r.sd)},
                  {"rmse", num(r.rmse)},
                  {"coverage_chs", num(r.coverage_chs)},
                  {"coverage_dka", num(r.coverage_dka)},
                  {"mean_selected", num(r.mean_selected)},
                  {"n_reps", r.n_reps},
                  {"n_failures", r.n_failures},
                  {"valid", r.valid}});
  }
  j["rows"] = rs;
  return j.dump(indent);
}

std::string McReport::to_table() const {
  char buf[200];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %9s %8s %8s %8s %7s %7s %9s %6s\n", "method", "crossfit",
                "bias", "sd", "rmse", "CHS", "DKA", "selected", "fail");
  out += buf;
  for (const McRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %9s %8s %8s %8s %7s %7s %9s %6lld\n",
                  to_string(r.method.method), r.method.crossfit ? "yes" : "no",
                  fixed(r.bias, 3).c_str(), fixed(r.sd, 3).c_str(), fixed(r.rmse, 3).c_str(),
                  fixed(r.coverage_chs, 1).c_str(), fixed(r.coverage_dka, 1).c_str(),
                  fixed(r.mean_selected, 1).c_str(), static_cast<long long>(r.n_failures));
    out += buf;
  }
  return out;
}

}  // namespace twlasso
