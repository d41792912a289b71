#include "twlasso/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "twlasso/crossfit.hpp"
#include "twlasso/dml.hpp"
#include "twlasso/errors.hpp"
#include "twlasso/mundlak.hpp"
#include "twlasso/panel.hpp"
#include "twlasso/penalty.hpp"
#include "twlasso/sim.hpp"

namespace twlasso {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::vector<std::string> kCommonKeys = {"out", "format", "threads", "seed"};
const std::vector<std::string> kPenaltyKeys = {"c_lambda", "gamma", "alpha", "max_refinements",
                                               "weight_bandwidth"};

struct KeyDoc {
  const char* key;
  const char* doc;
};

const std::vector<KeyDoc> kSimulateDocs = {
    {"N", "number of units (default 25)"},
    {"T", "number of periods (default 25)"},
    {"p", "number of covariates (default 200)"},
    {"theta0", "true effect (default 1)"},
    {"w1", "unit component weight (default 1/3)"},
    {"w2", "period component weight (default 1/3)"},
    {"w3", "idiosyncratic component weight (default 1/3)"},
    {"ar_coef", "AR(1) coefficient of period components (default 0.5)"},
    {"ar_init_var", "variance of the first period draw (default 0.75)"},
    {"ar_innovation_var", "AR(1) innovation variance (default 0.75)"},
    {"toeplitz_base", "covariate correlation base (default 0.5)"},
    {"iid", "draw every component independently per cell, 0/1 (default 0)"},
    {"u_scale", "outcome disturbance multiplier (default 1)"},
    {"v_scale", "treatment disturbance multiplier (default 1)"},
    {"reps", "number of replications (default 100)"},
    {"methods", "comma list of pols,h_lasso,c_lasso,tw_lasso (default tw_lasso)"},
    {"crossfit", "no, yes or both (default both)"},
    {"K", "unit folds (default 4)"},
    {"L", "time folds (default 8)"},
    {"bandwidth", "variance bandwidth override (default Andrews rule)"},
    {"max_selected_fraction", "drop a replication when a LASSO keeps more rows than this share (default 0.5)"},
};

const std::vector<KeyDoc> kEstimateDocs = {
    {"data", "input CSV with unit, time and variable columns (required)"},
    {"outcome", "outcome column (default y)"},
    {"treatment", "treatment column (default d)"},
    {"instrument", "instrument column (default: the treatment)"},
    {"covariates", "comma list of covariate columns (required)"},
    {"method", "pols, h_lasso, c_lasso or tw_lasso (default tw_lasso)"},
    {"crossfit", "yes or no (default yes)"},
    {"K", "unit folds (default 4)"},
    {"L", "time folds (default 8)"},
    {"tau", "dictionary polynomial order 1..3 (default 1)"},
    {"max_columns", "dictionary column cap (default 10000)"},
    {"bandwidth", "variance bandwidth override (default Andrews rule)"},
};

const std::vector<KeyDoc> kWeightsDocs = {
    {"data", "input CSV (required)"},
    {"outcome", "outcome column (default y)"},
    {"treatment", "treatment column (default d)"},
    {"covariates", "comma list of covariate columns (required)"},
    {"response", "outcome or treatment: the equation whose scores are audited (default treatment)"},
    {"tau", "use the dictionary of this order instead of the raw covariates (default 0 = raw)"},
    {"refine", "run the iterative LASSO and report its final weights, 0/1 (default 0)"},
    {"bandwidth", "Bartlett bandwidth for the weights (default Andrews rule per column)"},
};

const std::vector<KeyDoc> kSharedDocs = {
    {"out", "output file (default stdout)"},
    {"format", "json or csv (default json)"},
    {"threads", "worker threads for simulate (default 1)"},
    {"seed", "base seed (default 1)"},
    {"c_lambda", "penalty constant C (default 2)"},
    {"gamma", "penalty probability (default 0.1 / log max(N, T))"},
    {"alpha", "numerator of the default gamma (default 0.1)"},
    {"max_refinements", "maximum weight refinements (default 10)"},
    {"weight_bandwidth", "Bartlett bandwidth for penalty weights (default Andrews rule)"},
};

const std::vector<KeyDoc>& docs_for(const std::string& sub) {
  if (sub == "simulate") return kSimulateDocs;
  if (sub == "estimate") return kEstimateDocs;
  return kWeightsDocs;
}

std::string key_help(const std::string& sub) {
  std::string s = "\nConfig keys (key = value in --config files, or --set key=value):\n";
  auto add = [&](const std::vector<KeyDoc>& docs) {
    for (const auto& d : docs) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "  %-22s %s\n", d.key, d.doc);
      s += buf;
    }
  };
  add(docs_for(sub));
  add(kSharedDocs);
  return s;
}

const std::string& require(const RunConfig& c, const std::string& key) {
  const auto it = c.values.find(key);
  if (it == c.values.end() || it->second.empty()) {
    throw ConfigError("missing required key '" + key + "' for " + c.subcommand);
  }
  return it->second;
}

std::string get_string(const RunConfig& c, const std::string& key, const std::string& def) {
  const auto it = c.values.find(key);
  return it == c.values.end() ? def : it->second;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

double get_double(const RunConfig& c, const std::string& key, double def) {
  const auto it = c.values.find(key);
  return it == c.values.end() ? def : parse_number<double>(key, it->second);
}

long long get_int(const RunConfig& c, const std::string& key, long long def) {
  const auto it = c.values.find(key);
  return it == c.values.end() ? def : parse_number<long long>(key, it->second);
}

std::optional<double> get_opt_double(const RunConfig& c, const std::string& key) {
  const auto it = c.values.find(key);
  if (it == c.values.end()) return std::nullopt;
  return parse_number<double>(key, it->second);
}

std::optional<Index> get_opt_index(const RunConfig& c, const std::string& key) {
  const auto it = c.values.find(key);
  if (it == c.values.end()) return std::nullopt;
  return static_cast<Index>(parse_number<long long>(key, it->second));
}

bool get_bool(const RunConfig& c, const std::string& key, bool def) {
  const auto it = c.values.find(key);
  if (it == c.values.end()) return def;
  const std::string v = trim(it->second);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected 0/1, got '" + it->second + "'");
}

std::uint64_t seed_of(const RunConfig& c) {
  if (c.seed) return *c.seed;
  return static_cast<std::uint64_t>(get_int(c, "seed", 1));
}

PanelLassoConfig lasso_config(const RunConfig& c) {
  PanelLassoConfig lc;
  lc.c_lambda = get_double(c, "c_lambda", 2.0);
  lc.gamma = get_opt_double(c, "gamma");
  lc.alpha = get_double(c, "alpha", 0.1);
  lc.max_refinements = static_cast<int>(get_int(c, "max_refinements", 10));
  lc.bandwidth = get_opt_index(c, "weight_bandwidth");
  return lc;
}

CsvSchema schema_from(const RunConfig& c) {
  CsvSchema s;
  s.outcome = get_string(c, "outcome", "y");
  s.treatment = get_string(c, "treatment", "d");
  if (c.values.count("instrument")) s.instrument = c.values.at("instrument");
  s.covariates = split_list(require(c, "covariates"));
  return s;
}

void emit(const RunConfig& c, const std::string& payload, const std::string& table, std::ostream& out) {
  if (c.out_path) {
    std::ofstream f(*c.out_path, std::ios::binary);
    if (!f) throw InputError("cannot open output file '" + *c.out_path + "'");
    f << payload;
    if (!f) throw InputError("failed writing output file '" + *c.out_path + "'");
    out << table;
  } else {
    out << payload;
  }
}

std::string with_newline(std::string s) {
  if (s.empty() || s.back() != '\n') s += '\n';
  return s;
}

void run_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  DgpConfig dgp;
  dgp.n_units = get_int(c, "N", 25);
  dgp.n_periods = get_int(c, "T", 25);
  dgp.p = get_int(c, "p", 200);
  dgp.theta0 = get_double(c, "theta0", 1.0);
  dgp.weights = {get_double(c, "w1", 1.0 / 3.0), get_double(c, "w2", 1.0 / 3.0),
                 get_double(c, "w3", 1.0 / 3.0)};
  dgp.ar_coef = get_double(c, "ar_coef", 0.5);
  dgp.ar_init_var = get_double(c, "ar_init_var", 0.75);
  dgp.ar_innovation_var = get_double(c, "ar_innovation_var", 0.75);
  dgp.toeplitz_base = get_double(c, "toeplitz_base", 0.5);
  dgp.iid_mode = get_bool(c, "iid", false);
  dgp.u_scale = get_double(c, "u_scale", 1.0);
  dgp.v_scale = get_double(c, "v_scale", 1.0);
  dgp.seed = seed_of(c);
  dgp.validate();

  const std::string cf = get_string(c, "crossfit", "both");
  if (cf != "no" && cf != "yes" && cf != "both") {
    throw ConfigError("key 'crossfit': expected no, yes or both, got '" + cf + "'");
  }
  std::vector<MethodSpec> methods;
  for (const std::string& name : split_list(get_string(c, "methods", "tw_lasso"))) {
    const FirstStage m = parse_first_stage(name);
    if (cf != "yes") methods.push_back({m, false});
    if (cf != "no") methods.push_back({m, true});
  }
  if (methods.empty()) throw ConfigError("key 'methods' is empty");

  EstimationSettings s;
  s.K = static_cast<int>(get_int(c, "K", 4));
  s.L = static_cast<int>(get_int(c, "L", 8));
  const PanelLassoConfig lc = lasso_config(c);
  s.c_lambda = lc.c_lambda;
  s.gamma = lc.gamma;
  s.alpha = lc.alpha;
  s.max_refinements = lc.max_refinements;
  s.weight_bandwidth = lc.bandwidth;
  s.bandwidth = get_opt_index(c, "bandwidth");
  s.max_selected_fraction = get_double(c, "max_selected_fraction", 0.5);
  s.threads = c.threads;
  const Index reps = get_int(c, "reps", 100);

  const McReport report = run_monte_carlo(dgp, methods, reps, s);
  for (const McRow& r : report.rows) {
    if (!r.valid) err << "warning: every replication failed for " << method_label(r.method) << '\n';
    else if (r.n_failures > 0) {
      err << "note: " << r.n_failures << " failed replications for " << method_label(r.method) << '\n';
    }
  }
  const std::string payload = c.format == "csv" ? report.to_csv() : with_newline(report.to_json());
  emit(c, payload, report.to_table(), out);
}

void run_estimate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const CsvSchema schema = schema_from(c);
  const PanelDataset data = load_csv(require(c, "data"), schema);
  data.require_estimable();
  DictionaryOptions dopts;
  dopts.max_columns = get_int(c, "max_columns", 10000);
  const Dictionary dict = build_dictionary(data, static_cast<int>(get_int(c, "tau", 1)), dopts);
  for (const auto& name : dict.dropped_inputs) {
    err << "note: dictionary input '" << name << "' is constant and was left out\n";
  }

  DmlConfig dc;
  dc.first_stage = parse_first_stage(get_string(c, "method", "tw_lasso"));
  dc.lasso = lasso_config(c);
  dc.bandwidth = get_opt_index(c, "bandwidth");
  const bool crossfit = get_bool(c, "crossfit", true);
  DmlEstimate est;
  if (crossfit) {
    const CrossFitPlan plan = make_plan(data.n_units, data.n_periods, static_cast<int>(get_int(c, "K", 4)),
                                        static_cast<int>(get_int(c, "L", 8)), seed_of(c));
    est = estimate_crossfit(data, dict.features, plan, dc);
  } else {
    est = estimate_fullsample(data, dict.features, dc);
  }
  for (const auto& d : est.diagnostics) err << "note: " << d << '\n';

  std::string payload;
  if (c.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "method,crossfit,K,L,theta,se_chs,se_dka,ci_chs_low,ci_chs_high,ci_dka_low,ci_dka_high\n"
       << to_string(est.method) << ',' << (est.crossfit ? 1 : 0) << ','
       << (est.plan ? est.plan->K : 0) << ',' << (est.plan ? est.plan->L : 0) << ','
       << est.theta << ',' << est.se_chs << ',' << est.se_dka << ',' << est.ci_chs[0] << ','
       << est.ci_chs[1] << ',' << est.ci_dka[0] << ',' << est.ci_dka[1] << '\n';
    payload = os.str();
  } else {
    payload = with_newline(to_json(est));
  }
  emit(c, payload, format_table(est), out);
}

void run_weights(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const CsvSchema schema = schema_from(c);
  const PanelDataset data = load_csv(require(c, "data"), schema);
  data.validate();
  const long long tau = get_int(c, "tau", 0);
  FeatureMatrix features;
  if (tau == 0) {
    features = flatten(data);
  } else {
    const Dictionary dict = build_dictionary(data, static_cast<int>(tau));
    for (const auto& name : dict.dropped_inputs) {
      err << "note: dictionary input '" << name << "' is constant and was left out\n";
    }
    features = dict.features;
  }
  const std::string response_name = get_string(c, "response", "treatment");
  if (response_name != "treatment" && response_name != "outcome") {
    throw ConfigError("key 'response': expected outcome or treatment, got '" + response_name + "'");
  }
  const Eigen::VectorXd response =
      to_panel_vector(response_name == "outcome" ? data.outcome : data.treatment);
  const std::optional<Index> bw = get_opt_index(c, "bandwidth");
  const Index n = data.n_units, t = data.n_periods;
  const Index p = features.cols();

  PenaltyPlan plan;
  if (get_bool(c, "refine", false)) {
    PanelLassoConfig lc = lasso_config(c);
    if (bw) lc.bandwidth = bw;
    plan = iterate_two_way_lasso(features, response, lc).plan;
  } else {
    Eigen::VectorXd resid = response.array() - response.mean();
    const PanelScores scores = PanelScores::from_residuals(features.values, resid, n, t);
    if (bw) {
      plan = feasible_weights(scores, *bw);
    } else if (t >= 3) {
      plan = feasible_weights(scores, column_bandwidths(scores));
    } else {
      plan = feasible_weights(scores, 1);
    }
  }
  for (const auto& d : plan.diagnostics) err << "note: " << d << '\n';
  if (!plan.degenerate_columns.empty()) {
    err << "warning: " << plan.degenerate_columns.size() << " of " << p
        << " regressors have degenerate (all-zero) scores\n";
  }

  std::vector<bool> degenerate(static_cast<std::size_t>(p), false);
  for (Index j : plan.degenerate_columns) degenerate[static_cast<std::size_t>(j)] = true;
  auto bandwidth_of = [&](Index j) -> long long {
    return plan.bandwidths.size() == p ? plan.bandwidths(j) : 0;
  };
  auto omega = [](const Eigen::VectorXd& v, Index j) {
    return v.size() > j ? v(j) : std::numeric_limits<double>::quiet_NaN();
  };
  std::string payload;
  if (c.format == "csv") {
    payload = "column,name,omega2_a,omega2_g,omega2_e,omega2,weight,bandwidth,degenerate\n";
    for (Index j = 0; j < p; ++j) {
      payload += std::to_string(j) + ',' + features.column_names[j] + ',' +
                 format_number(omega(plan.omega2_a, j)) + ',' + format_number(omega(plan.omega2_g, j)) +
                 ',' + format_number(omega(plan.omega2_e, j)) + ',' +
                 format_number(plan.weights(j) * plan.weights(j)) + ',' +
                 format_number(plan.weights(j)) + ',' + std::to_string(bandwidth_of(j)) + ',' +
                 (degenerate[j] ? "1" : "0") + '\n';
    }
  } else {
    using nlohmann::json;
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["response"] = response_name;
    j["variant"] = to_string(plan.variant);
    j["n_units"] = n;
    j["n_periods"] = t;
    json rows = json::array();
    for (Index k = 0; k < p; ++k) {
      rows.push_back({{"column", k},
                      {"name", features.column_names[k]},
                      {"omega2_a", num(omega(plan.omega2_a, k))},
                      {"omega2_g", num(omega(plan.omega2_g, k))},
                      {"omega2_e", num(omega(plan.omega2_e, k))},
                      {"omega2", num(plan.weights(k) * plan.weights(k))},
                      {"weight", num(plan.weights(k))},
                      {"bandwidth", bandwidth_of(k)},
                      {"degenerate", static_cast<bool>(degenerate[k])}});
    }
    j["rows"] = rows;
    j["degenerate_columns"] = plan.degenerate_columns;
    j["diagnostics"] = plan.diagnostics;
    payload = j.dump(2) + "\n";
  }
  std::string table;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %12s %12s %12s %12s\n", "regressor", "omega2_a", "omega2_g",
                "omega2_e", "omega2");
  table += buf;
  for (Index k = 0; k < p; ++k) {
    std::snprintf(buf, sizeof buf, "%-24s %12.3f %12.3f %12.3f %12.3f\n", features.column_names[k].c_str(),
                  omega(plan.omega2_a, k), omega(plan.omega2_g, k), omega(plan.omega2_e, k),
                  plan.weights(k) * plan.weights(k));
    table += buf;
  }
  emit(c, payload, table, out);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": key '" + key + "' repeated");
    }
  }
  return out;
}

const std::vector<std::string>& known_keys(const std::string& subcommand) {
  static const auto build = [](const std::vector<KeyDoc>& docs) {
    std::vector<std::string> keys = kCommonKeys;
    keys.insert(keys.end(), kPenaltyKeys.begin(), kPenaltyKeys.end());
    for (const auto& d : docs) keys.push_back(d.key);
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  static const std::vector<std::string> sim = build(kSimulateDocs);
  static const std::vector<std::string> est = build(kEstimateDocs);
  static const std::vector<std::string> wts = build(kWeightsDocs);
  if (subcommand == "simulate") return sim;
  if (subcommand == "estimate") return est;
  if (subcommand == "weights") return wts;
  throw ConfigError("unknown subcommand '" + subcommand + "'");
}

void validate_config(const RunConfig& c) {
  const auto& keys = known_keys(c.subcommand);
  for (const auto& [k, v] : c.values) {
    if (!std::binary_search(keys.begin(), keys.end(), k)) {
      throw ConfigError("unknown key '" + k + "' for " + c.subcommand + " (see --help)");
    }
  }
  if (c.format != "json" && c.format != "csv") {
    throw ConfigError("format must be json or csv, got '" + c.format + "'");
  }
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (c.subcommand == "estimate" || c.subcommand == "weights") {
    require(c, "data");
    require(c, "covariates");
  }
}

void run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  validate_config(c);
  if (c.subcommand == "simulate") run_simulate(c, out, err);
  else if (c.subcommand == "estimate") run_estimate(c, out, err);
  else run_weights(c, out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-way cluster LASSO and panel DML estimation"};
  app.require_subcommand(1);
  struct Flags {
    std::string config;
    std::string out;
    std::string format;
    int threads = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
  };
  std::map<std::string, Flags> flags;
  for (const char* name : {"simulate", "estimate", "weights"}) {
    const std::string desc = std::string(name) == "simulate" ? "Monte Carlo study"
                             : std::string(name) == "estimate" ? "Estimate the effect from a CSV panel"
                                                               : "Penalty-weight components per regressor";
    CLI::App* sub = app.add_subcommand(name, desc);
    Flags& f = flags[name];
    sub->add_option("--config", f.config, "key = value settings file");
    sub->add_option("--out", f.out, "output file (default stdout)");
    sub->add_option("--format", f.format, "json or csv");
    sub->add_option("--threads", f.threads, "worker threads");
    sub->add_option("--seed", f.seed, "base seed");
    sub->add_option("--set", f.sets, "override a config key, key=value (repeatable)");
    sub->footer(key_help(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig c;
    for (const auto& [name, f] : flags) {
      CLI::App* sub = app.get_subcommand(name);
      if (!sub->parsed()) continue;
      c.subcommand = name;
      if (!f.config.empty()) {
        std::ifstream in(f.config, std::ios::binary);
        if (!in) throw InputError("cannot open config file '" + f.config + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        c.values = parse_config_text(ss.str(), f.config);
      }
      for (const std::string& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        c.values[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
      }
      if (sub->count("--out")) c.values["out"] = f.out;
      if (sub->count("--format")) c.values["format"] = f.format;
      if (sub->count("--threads")) c.values["threads"] = std::to_string(f.threads);
      if (sub->count("--seed")) c.values["seed"] = std::to_string(f.seed);
    }
    if (c.values.count("out") && !c.values.at("out").empty()) c.out_path = c.values.at("out");
    c.format = get_string(c, "format", "json");
    c.threads = static_cast<int>(get_int(c, "threads", 1));
    if (c.values.count("seed")) c.seed = parse_number<std::uint64_t>("seed", c.values.at("seed"));
    run(c, out, err);
    return 0;
  } catch (const Error& e) {
    err << "error (" << e.category() << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace twlasso
