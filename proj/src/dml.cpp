#include "twlasso/dml.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "twlasso/bandwidth.hpp"
#include "twlasso/errors.hpp"

namespace twlasso {

const char* to_string(FirstStage m) {
  switch (m) {
    case FirstStage::pols: return "pols";
    case FirstStage::h_lasso: return "h_lasso";
    case FirstStage::c_lasso: return "c_lasso";
    case FirstStage::tw_lasso: return "tw_lasso";
    case FirstStage::oracle: return "oracle";
  }
  return "unknown";
}

FirstStage parse_first_stage(const std::string& name) {
  if (name == "pols") return FirstStage::pols;
  if (name == "h_lasso" || name == "h") return FirstStage::h_lasso;
  if (name == "c_lasso" || name == "c") return FirstStage::c_lasso;
  if (name == "tw_lasso" || name == "tw") return FirstStage::tw_lasso;
  throw ConfigError("unknown first-stage method '" + name +
                    "' (expected pols, h_lasso, c_lasso or tw_lasso)");
}

Eigen::VectorXd orthogonal_score(const Eigen::Ref<const Eigen::VectorXd>& z_res,
                                 const Eigen::Ref<const Eigen::VectorXd>& y_res,
                                 const Eigen::Ref<const Eigen::VectorXd>& d_res, double theta) {
  if (z_res.size() != y_res.size() || z_res.size() != d_res.size()) {
    throw InputError("orthogonal_score: residual vectors differ in length");
  }
  return (z_res.array() * (y_res.array() - d_res.array() * theta)).matrix();
}

ScoreSums score_sums(const Eigen::Ref<const Eigen::MatrixXd>& psi, Index bandwidth) {
  if (bandwidth < 1) throw DomainError("variance bandwidth must be at least 1");
  ScoreSums s;
  s.a = psi.rowwise().sum().squaredNorm();
  const Eigen::VectorXd col_sums = psi.colwise().sum().transpose();
  s.dk = bartlett_long_run_sum(col_sums, bandwidth);
  for (Index i = 0; i < psi.rows(); ++i) {
    s.nw += bartlett_long_run_sum(psi.row(i).transpose(), bandwidth);
  }
  return s;
}

namespace {

void combine(VarianceResult& v) {
  const double inv_a2 = 1.0 / (v.a_hat * v.a_hat);
  v.var_dka = inv_a2 * (v.omega_a + v.omega_dk);
  v.var_chs = inv_a2 * (v.omega_a + v.omega_dk - v.omega_nw);
}

}  // namespace

VarianceResult variance_crossfit(const std::vector<FoldScores>& folds, int K, int L) {
  if (folds.empty()) throw InputError("variance_crossfit: no folds");
  if (K < 1 || L < 1) throw DomainError("variance_crossfit: K and L must be positive");
  const double ratio = static_cast<double>(K) / static_cast<double>(L);
  VarianceResult v;
  for (const FoldScores& f : folds) {
    if (f.psi.size() == 0) throw InputError("variance_crossfit: empty fold");
    if (f.psi_a.rows() != f.psi.rows() || f.psi_a.cols() != f.psi.cols()) {
      throw InputError("variance_crossfit: psi and psi_a shapes differ");
    }
    const ScoreSums s = score_sums(f.psi, f.bandwidth);
    const double n_k = static_cast<double>(f.psi.rows());
    const double t_l = static_cast<double>(f.psi.cols());
    const double scale = 1.0 / (n_k * t_l * t_l);
    v.omega_a += scale * s.a;
    v.omega_dk += ratio * scale * s.dk;
    v.omega_nw += ratio * scale * s.nw;
    v.a_hat += f.psi_a.mean();
  }
  const double count = static_cast<double>(folds.size());
  v.omega_a /= count;
  v.omega_dk /= count;
  v.omega_nw /= count;
  v.a_hat /= count;
  combine(v);
  return v;
}

VarianceResult variance_fullsample(const Eigen::Ref<const Eigen::MatrixXd>& psi,
                                   const Eigen::Ref<const Eigen::MatrixXd>& psi_a,
                                   Index bandwidth) {
  if (psi.size() == 0) throw InputError("variance_fullsample: empty score matrix");
  if (psi_a.rows() != psi.rows() || psi_a.cols() != psi.cols()) {
    throw InputError("variance_fullsample: psi and psi_a shapes differ");
  }
  const ScoreSums s = score_sums(psi, bandwidth);
  const double n = static_cast<double>(psi.rows());
  const double t = static_cast<double>(psi.cols());
  const double scale = 1.0 / (n * t * t);
  VarianceResult v;
  v.omega_a = scale * s.a;
  v.omega_dk = scale * s.dk;
  v.omega_nw = scale * s.nw;
  v.a_hat = psi_a.mean();
  combine(v);
  return v;
}

namespace {

struct Sample {
  Eigen::MatrixXd design;
  GramSystem sys;
  Index n_units = 0;
  Index n_periods = 0;
  std::vector<Index> positions;
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Index>& rows) {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = v(rows[r]);
  return out;
}

WeightVariant variant_of(FirstStage m) {
  switch (m) {
    case FirstStage::h_lasso: return WeightVariant::heteroskedastic;
    case FirstStage::c_lasso: return WeightVariant::cluster;
    default: return WeightVariant::two_way;
  }
}

// Minimum-norm pooled OLS for several responses sharing one design. The
// eigendecomposition runs on the smaller of F_c'F_c and F_c F_c'.
std::vector<EquationFit> fit_pols(const Sample& s, const std::vector<const Eigen::VectorXd*>& ys,
                                  const std::vector<const char*>& labels,
                                  std::vector<std::string>& diagnostics) {
  const Index p = s.design.cols();
  const Index n = s.design.rows();
  std::vector<Index> cols;
  for (Index j = 0; j < p; ++j) {
    if (!s.sys.intercept_column || *s.sys.intercept_column != j) cols.push_back(j);
  }
  const Index k = static_cast<Index>(cols.size());
  const Index m = static_cast<Index>(ys.size());
  Eigen::MatrixXd fc(n, k);
  for (Index a = 0; a < k; ++a) {
    fc.col(a) = s.design.col(cols[a]).array() - s.sys.means(cols[a]);
  }
  Eigen::MatrixXd yc(n, m);
  Eigen::VectorXd ymean(m);
  for (Index r = 0; r < m; ++r) {
    ymean(r) = ys[r]->mean();
    yc.col(r) = ys[r]->array() - ymean(r);
  }
  Eigen::MatrixXd b(k, m);
  bool deficient = false;
  if (k > 0) {
    const bool dual = n < k;
    Eigen::MatrixXd g(dual ? n : k, dual ? n : k);
    if (dual) {
      g.setZero();
      g.selfadjointView<Eigen::Lower>().rankUpdate(fc);
    } else {
      g.setZero();
      g.selfadjointView<Eigen::Lower>().rankUpdate(fc.transpose());
    }
    g = g.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double cutoff = top * 1e-10 * static_cast<double>(k);
    Eigen::VectorXd inv(ev.size());
    Index rank = 0;
    for (Index i = 0; i < ev.size(); ++i) {
      const bool keep = ev(i) > cutoff;
      inv(i) = keep ? 1.0 / ev(i) : 0.0;
      rank += keep ? 1 : 0;
    }
    deficient = rank < k;
    const Eigen::MatrixXd& v = es.eigenvectors();
    if (dual) {
      b = fc.transpose() * (v * (inv.asDiagonal() * (v.transpose() * yc)));
    } else {
      b = v * (inv.asDiagonal() * (v.transpose() * (fc.transpose() * yc)));
    }
  }
  std::vector<EquationFit> out(static_cast<std::size_t>(m));
  for (Index r = 0; r < m; ++r) {
    EquationFit& f = out[static_cast<std::size_t>(r)];
    f.coefficients = Eigen::VectorXd::Zero(p);
    for (Index a = 0; a < k; ++a) f.coefficients(cols[a]) = b(a, r);
    f.intercept = ymean(r) - s.sys.means.dot(f.coefficients);
    f.selected = cols;
    f.rank_deficient = deficient;
    if (deficient) {
      diagnostics.push_back(std::string("pooled OLS for ") + labels[static_cast<std::size_t>(r)] +
                            " is rank deficient; minimum-norm solution used");
    }
  }
  return out;
}

EquationFit fit_equation(const Sample& s, const Eigen::VectorXd& y, const DmlConfig& cfg,
                         const char* label, std::vector<std::string>& diagnostics) {
  EquationFit out;
  PanelLassoConfig lc = cfg.lasso;
  lc.variant = variant_of(cfg.first_stage);
  const PanelLassoResult r =
      iterate_panel_lasso(s.design, s.sys, y, s.n_units, s.n_periods, s.positions, lc);
  out.coefficients = r.fit.coefficients;
  out.intercept = r.fit.intercept;
  out.selected = r.lasso.selected;
  out.refinements = r.refinements;
  out.iterations = r.lasso.n_iterations;
  out.rank_deficient = r.fit.rank_deficient;
  if (cfg.max_selected_fraction &&
      static_cast<double>(out.selected.size()) >
          *cfg.max_selected_fraction * static_cast<double>(s.design.rows())) {
    throw EstimationError(std::string("LASSO for ") + label + " selected " +
                          std::to_string(out.selected.size()) + " of " +
                          std::to_string(s.design.rows()) + " rows");
  }
  for (const auto& d : r.plan.diagnostics) diagnostics.push_back(std::string(label) + ": " + d);
  return out;
}

NuisanceFit fit_nuisance(const Sample& s, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                         const Eigen::VectorXd* z, const DmlConfig& cfg,
                         std::vector<std::string>& diagnostics) {
  if (cfg.first_stage == FirstStage::oracle) {
    if (!cfg.oracle) throw ConfigError("oracle first stage requested without oracle coefficients");
    return *cfg.oracle;
  }
  NuisanceFit nf;
  if (cfg.first_stage == FirstStage::pols) {
    std::vector<const Eigen::VectorXd*> ys{&y, &d};
    std::vector<const char*> labels{"Y", "D"};
    if (z) {
      ys.push_back(z);
      labels.push_back("Z");
    }
    auto fits = fit_pols(s, ys, labels, diagnostics);
    nf.beta = std::move(fits[0]);
    nf.pi = std::move(fits[1]);
    nf.zeta = z ? std::move(fits[2]) : nf.pi;
    return nf;
  }
  nf.beta = fit_equation(s, y, cfg, "Y", diagnostics);
  nf.pi = fit_equation(s, d, cfg, "D", diagnostics);
  nf.zeta = z ? fit_equation(s, *z, cfg, "Z", diagnostics) : nf.pi;
  return nf;
}

Eigen::VectorXd residual(const Eigen::Ref<const Eigen::MatrixXd>& design,
                         const Eigen::VectorXd& response, const EquationFit& fit) {
  if (fit.coefficients.size() != design.cols()) {
    throw InputError("nuisance coefficients do not match the dictionary width");
  }
  Eigen::VectorXd r = response - design * fit.coefficients;
  r.array() -= fit.intercept;
  return r;
}

void check_inputs(const PanelDataset& data, const FeatureMatrix& dictionary) {
  data.require_estimable();
  if (dictionary.rows() != data.n_units * data.n_periods) {
    throw InputError("dictionary rows do not match the panel size N*T");
  }
  if (dictionary.cols() == 0) throw InputError("dictionary has no columns");
}

void finalize(DmlEstimate& est, const VarianceResult& v, Index n_units) {
  est.variance = v;
  est.var_chs = v.var_chs;
  est.var_dka = v.var_dka;
  const double n = static_cast<double>(n_units);
  est.se_dka = std::sqrt(std::max(v.var_dka, 0.0) / n);
  est.chs_negative = !(v.var_chs >= 0.0);
  if (est.chs_negative) {
    est.se_chs = std::numeric_limits<double>::quiet_NaN();
    est.diagnostics.push_back("CHS variance estimate is negative; its standard error is reported as NaN");
  } else {
    est.se_chs = std::sqrt(v.var_chs / n);
  }
  est.ci_chs = {est.theta - kZ975 * est.se_chs, est.theta + kZ975 * est.se_chs};
  est.ci_dka = {est.theta - kZ975 * est.se_dka, est.theta + kZ975 * est.se_dka};
}

std::array<Index, 3> counts(const NuisanceFit& nf) {
  return {static_cast<Index>(nf.zeta.selected.size()), static_cast<Index>(nf.beta.selected.size()),
          static_cast<Index>(nf.pi.selected.size())};
}

}  // namespace

DmlEstimate estimate_fullsample(const PanelDataset& data, const FeatureMatrix& dictionary,
                                const DmlConfig& config) {
  check_inputs(data, dictionary);
  const Index n = data.n_units;
  const Index t = data.n_periods;
  DmlEstimate est;
  est.method = config.first_stage;
  est.crossfit = false;
  est.n_units = n;
  est.n_periods = t;

  const Eigen::VectorXd y = to_panel_vector(data.outcome);
  const Eigen::VectorXd d = to_panel_vector(data.treatment);
  const Eigen::VectorXd z = data.instrument ? to_panel_vector(*data.instrument) : Eigen::VectorXd();

  Sample s;
  s.design = dictionary.values;
  s.n_units = n;
  s.n_periods = t;
  s.positions.resize(t);
  std::iota(s.positions.begin(), s.positions.end(), Index{0});
  if (config.first_stage != FirstStage::oracle) {
    s.sys = GramSystem::from_design(s.design, dictionary.intercept_column);
  }
  const NuisanceFit nf =
      fit_nuisance(s, y, d, data.instrument ? &z : nullptr, config, est.diagnostics);

  const Eigen::VectorXd yr = residual(s.design, y, nf.beta);
  const Eigen::VectorXd dr = residual(s.design, d, nf.pi);
  const Eigen::VectorXd zr = data.instrument ? residual(s.design, z, nf.zeta) : dr;
  const Eigen::VectorXd psi_a = -(zr.array() * dr.array()).matrix();
  const Eigen::VectorXd psi_b = (zr.array() * yr.array()).matrix();
  const double a_hat = psi_a.mean();
  if (!(std::abs(a_hat) >= 1e-12)) {
    throw IdentificationError("moment Jacobian is numerically zero (|A| < 1e-12): the residualized "
                              "instrument carries no information about the residualized treatment");
  }
  est.theta = -psi_b.mean() / a_hat;
  est.score_matrix = from_panel_vector(orthogonal_score(zr, yr, dr, est.theta), n, t);
  const Eigen::MatrixXd psi_a_mat = from_panel_vector(psi_a, n, t);

  Index m = 1;
  if (config.bandwidth) {
    m = std::clamp<Index>(*config.bandwidth, 1, t);
  } else {
    const BandwidthChoice bc = andrews_bandwidth_choice(est.score_matrix);
    m = std::min(bc.bandwidth, t);
    if (bc.degenerate) est.diagnostics.push_back("score averages have zero variance; bandwidth 1");
  }
  est.bandwidths = {m};
  est.selected_counts = {counts(nf)};
  est.nuisance = nf;
  finalize(est, variance_fullsample(est.score_matrix, psi_a_mat, m), n);
  return est;
}

DmlEstimate estimate_crossfit(const PanelDataset& data, const FeatureMatrix& dictionary,
                              const CrossFitPlan& plan, const DmlConfig& config) {
  check_inputs(data, dictionary);
  const Index n = data.n_units;
  const Index t = data.n_periods;
  if (plan.n_units != n || plan.n_periods != t) {
    throw InputError("cross-fitting plan dimensions do not match the panel");
  }
  DmlEstimate est;
  est.method = config.first_stage;
  est.crossfit = true;
  est.plan = plan;
  est.n_units = n;
  est.n_periods = t;

  const Eigen::VectorXd y = to_panel_vector(data.outcome);
  const Eigen::VectorXd d = to_panel_vector(data.treatment);
  const Eigen::VectorXd z = data.instrument ? to_panel_vector(*data.instrument) : Eigen::VectorXd();
  const Eigen::MatrixXd& x = dictionary.values;
  const Index p = x.cols();
  const int K = plan.K;
  const int L = plan.L;
  const bool need_gram = config.first_stage != FirstStage::oracle;

  // Raw cross-products per (unit fold, time fold) block; auxiliary systems
  // are sums of blocks.
  std::vector<Eigen::MatrixXd> block_cross;
  std::vector<Eigen::VectorXd> block_sums;
  std::vector<Index> block_rows;
  if (need_gram) {
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < L; ++l) {
        const Eigen::MatrixXd xb = gather_rows(x, main_sample(plan, k, l).rows(t));
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, p);
        cross.selfadjointView<Eigen::Lower>().rankUpdate(xb.transpose());
        cross.triangularView<Eigen::StrictlyUpper>() = cross.transpose();
        block_cross.push_back(std::move(cross));
        block_sums.push_back(xb.colwise().sum().transpose());
        block_rows.push_back(xb.rows());
      }
    }
  }

  struct FoldResidual {
    SampleIndex main;
    Eigen::VectorXd zr, yr, dr;
  };
  std::vector<FoldResidual> fold_res;
  Eigen::VectorXd mean_a(K * L), mean_b(K * L);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      const int f = k * L + l;
      NuisanceFit nf;
      try {
        const SampleIndex aux = auxiliary_sample(plan, k, l);
        Sample s;
        const std::vector<Index> rows = aux.rows(t);
        s.design = gather_rows(x, rows);
        s.n_units = static_cast<Index>(aux.units.size());
        s.n_periods = static_cast<Index>(aux.periods.size());
        s.positions = aux.periods;
        if (need_gram) {
          Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, p);
          Eigen::VectorXd sums = Eigen::VectorXd::Zero(p);
          Index count = 0;
          for (int kk = 0; kk < K; ++kk) {
            if (kk == k) continue;
            for (int ll = 0; ll < L; ++ll) {
              if (ll >= l - 1 && ll <= l + 1) continue;
              cross += block_cross[kk * L + ll];
              sums += block_sums[kk * L + ll];
              count += block_rows[kk * L + ll];
            }
          }
          s.sys = GramSystem::from_raw_sums(count, sums, cross, dictionary.intercept_column);
        }
        std::vector<std::string> diag;
        const Eigen::VectorXd z_aux = data.instrument ? gather(z, rows) : Eigen::VectorXd();
        nf = fit_nuisance(s, gather(y, rows), gather(d, rows),
                          data.instrument ? &z_aux : nullptr, config, diag);
        for (auto& m : diag) {
          est.diagnostics.push_back("fold (" + std::to_string(k + 1) + ", " +
                                    std::to_string(l + 1) + ") " + m);
        }
      } catch (const Error& e) {
        throw FoldError("first stage failed on fold (" + std::to_string(k + 1) + ", " +
                            std::to_string(l + 1) + "): " + e.what(),
                        k + 1, l + 1);
      }
      FoldResidual fr;
      fr.main = main_sample(plan, k, l);
      const std::vector<Index> rows = fr.main.rows(t);
      const Eigen::MatrixXd xm = gather_rows(x, rows);
      fr.yr = residual(xm, gather(y, rows), nf.beta);
      fr.dr = residual(xm, gather(d, rows), nf.pi);
      fr.zr = data.instrument ? residual(xm, gather(z, rows), nf.zeta) : fr.dr;
      mean_a(f) = -(fr.zr.array() * fr.dr.array()).mean();
      mean_b(f) = (fr.zr.array() * fr.yr.array()).mean();
      est.selected_counts.push_back(counts(nf));
      fold_res.push_back(std::move(fr));
    }
  }

  const double a_hat = mean_a.mean();
  if (!(std::abs(a_hat) >= 1e-12)) {
    throw IdentificationError("moment Jacobian is numerically zero (|A| < 1e-12): the residualized "
                              "instrument carries no information about the residualized treatment");
  }
  est.theta = -mean_b.mean() / a_hat;

  est.score_matrix = Eigen::MatrixXd::Zero(n, t);
  std::vector<FoldScores> folds;
  for (const FoldResidual& fr : fold_res) {
    const Index nk = static_cast<Index>(fr.main.units.size());
    const Index tl = static_cast<Index>(fr.main.periods.size());
    FoldScores fs;
    fs.psi = from_panel_vector(orthogonal_score(fr.zr, fr.yr, fr.dr, est.theta), nk, tl);
    fs.psi_a = from_panel_vector(-(fr.zr.array() * fr.dr.array()).matrix(), nk, tl);
    if (config.bandwidth) {
      fs.bandwidth = std::clamp<Index>(*config.bandwidth, 1, tl);
    } else if (tl >= 3) {
      fs.bandwidth = std::min(andrews_bandwidth_choice(fs.psi).bandwidth, tl);
    } else {
      fs.bandwidth = 1;
    }
    est.bandwidths.push_back(fs.bandwidth);
    for (Index i = 0; i < nk; ++i) {
      for (Index s = 0; s < tl; ++s) est.score_matrix(fr.main.units[i], fr.main.periods[s]) = fs.psi(i, s);
    }
    folds.push_back(std::move(fs));
  }
  finalize(est, variance_crossfit(folds, K, L), n);
  return est;
}

std::string to_json(const DmlEstimate& est, int indent) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["theta"] = num(est.theta);
  j["se_chs"] = num(est.se_chs);
  j["se_dka"] = num(est.se_dka);
  j["var_chs"] = num(est.var_chs);
  j["var_dka"] = num(est.var_dka);
  j["ci_chs"] = {num(est.ci_chs[0]), num(est.ci_chs[1])};
  j["ci_dka"] = {num(est.ci_dka[0]), num(est.ci_dka[1])};
  j["chs_negative"] = est.chs_negative;
  j["method"] = to_string(est.method);
  j["crossfit"] = est.crossfit;
  j["K"] = est.plan ? est.plan->K : 0;
  j["L"] = est.plan ? est.plan->L : 0;
  j["n_units"] = est.n_units;
  j["n_periods"] = est.n_periods;
  j["bandwidths"] = est.bandwidths;
  json sc = json::array();
  for (const auto& c : est.selected_counts) sc.push_back({{"zeta", c[0]}, {"beta", c[1]}, {"pi", c[2]}});
  j["selected_counts"] = sc;
  j["omega"] = {{"a", num(est.variance.omega_a)},
                {"dk", num(est.variance.omega_dk)},
                {"nw", num(est.variance.omega_nw)},
                {"a_hat", num(est.variance.a_hat)}};
  if (est.plan) {
    j["unit_folds"] = est.plan->unit_folds;
    j["seed"] = est.plan->seed;
  }
  j["diagnostics"] = est.diagnostics;
  return j.dump(indent);
}

std::string format_table(const DmlEstimate& est) {
  char buf[160];
  std::string out;
  auto line = [&](const char* label, double v) {
    std::snprintf(buf, sizeof buf, "%-14s %10.3f\n", label, v);
    out += buf;
  };
  auto interval = [&](const char* label, const std::array<double, 2>& ci) {
    std::snprintf(buf, sizeof buf, "%-14s [%9.3f, %9.3f]\n", label, ci[0], ci[1]);
    out += buf;
  };
  std::snprintf(buf, sizeof buf, "%-14s %10s\n", "method", to_string(est.method));
  out += buf;
  if (est.plan) {
    std::snprintf(buf, sizeof buf, "%-14s %10s\n", "cross-fit",
                  ("K=" + std::to_string(est.plan->K) + " L=" + std::to_string(est.plan->L)).c_str());
  } else {
    std::snprintf(buf, sizeof buf, "%-14s %10s\n", "cross-fit", "no");
  }
  out += buf;
  line("theta", est.theta);
  line("se CHS", est.se_chs);
  line("se DKA", est.se_dka);
  interval("95% CI CHS", est.ci_chs);
  interval("95% CI DKA", est.ci_dka);
  return out;
}

}  // namespace twlasso
