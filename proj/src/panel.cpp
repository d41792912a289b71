#include "twlasso/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "twlasso/errors.hpp"

namespace twlasso {

namespace {

void check_shape(const Eigen::MatrixXd& m, Index n, Index t, const std::string& what) {
  if (m.rows() != n || m.cols() != t) {
    throw InputError(what + ": expected " + std::to_string(n) + "x" + std::to_string(t) +
                     " matrix");
  }
  if (!m.allFinite()) throw InputError(what + ": non-finite value");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace

void PanelDataset::validate() const {
  if (n_units < 1 || n_periods < 1) throw InputError("panel must have N >= 1 and T >= 1");
  check_shape(outcome, n_units, n_periods, "outcome");
  check_shape(treatment, n_units, n_periods, "treatment");
  if (instrument) check_shape(*instrument, n_units, n_periods, "instrument");
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    check_shape(covariates[j], n_units, n_periods, "covariate " + std::to_string(j));
  }
  if (!covariate_names.empty() && covariate_names.size() != covariates.size()) {
    throw InputError("covariate_names length does not match covariates");
  }
  if (static_cast<Index>(unit_labels.size()) != n_units ||
      static_cast<Index>(time_labels.size()) != n_periods) {
    throw InputError("label lists do not match panel dimensions");
  }
  for (std::size_t t = 1; t < time_labels.size(); ++t) {
    if (!(time_labels[t] > time_labels[t - 1])) {
      throw InputError("time labels must be strictly increasing");
    }
  }
}

void PanelDataset::require_estimable() const {
  validate();
  if (n_units < 2 || n_periods < 4) {
    throw InputError("estimation needs N >= 2 units and T >= 4 periods");
  }
}

Eigen::VectorXd to_panel_vector(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  Eigen::Map<Eigen::MatrixXd>(v.data(), m.cols(), m.rows()) = m.transpose();
  return v;
}

Eigen::MatrixXd from_panel_vector(const Eigen::Ref<const Eigen::VectorXd>& v, Index n_units,
                                  Index n_periods) {
  if (v.size() != n_units * n_periods) throw InputError("from_panel_vector: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n_periods, n_units).transpose();
}

FeatureMatrix flatten(const PanelDataset& data) {
  data.validate();
  FeatureMatrix fm;
  fm.n_units = data.n_units;
  fm.n_periods = data.n_periods;
  fm.values.resize(data.n_units * data.n_periods, data.n_covariates());
  for (Index j = 0; j < data.n_covariates(); ++j) {
    fm.values.col(j) = to_panel_vector(data.covariates[j]);
    fm.column_names.push_back(data.covariate_names.empty() ? "x" + std::to_string(j + 1)
                                                           : data.covariate_names[j]);
  }
  return fm;
}

std::vector<Eigen::MatrixXd> unflatten(const FeatureMatrix& features) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(features.cols());
  for (Index j = 0; j < features.cols(); ++j) {
    out.push_back(from_panel_vector(features.values.col(j), features.n_units, features.n_periods));
  }
  return out;
}

PanelDataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("CSV has no header row", line_no, 0);
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
    header[0] = header[0].substr(3);
  }

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column '" + name + "'", 1, 0);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t unit_col = column_of("unit");
  const std::size_t time_col = column_of("time");
  std::vector<std::size_t> value_cols = {column_of(schema.outcome), column_of(schema.treatment)};
  if (schema.instrument) value_cols.push_back(column_of(*schema.instrument));
  for (const auto& c : schema.covariates) value_cols.push_back(column_of(c));

  struct Row {
    std::string unit;
    double time;
    std::string time_text;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no, 0);
    }
    Row r;
    r.unit = fields[unit_col];
    if (r.unit.empty()) throw ParseError("empty unit id", line_no, unit_col + 1);
    const auto t = parse_double(fields[time_col]);
    if (!t || !std::isfinite(*t)) {
      throw ParseError("line " + std::to_string(line_no) + ", column 'time': non-numeric value '" +
                           fields[time_col] + "'",
                       line_no, time_col + 1);
    }
    r.time = *t;
    r.time_text = fields[time_col];
    for (std::size_t c : value_cols) {
      const auto v = parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("line " + std::to_string(line_no) + ", column '" + header[c] +
                             "': non-numeric value '" + fields[c] + "'",
                         line_no, c + 1);
      }
      r.values.push_back(*v);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError("CSV has no data rows", line_no, 0);

  // Units: numeric order when every id is numeric, otherwise lexicographic.
  std::vector<std::string> units;
  for (const auto& r : rows) units.push_back(r.unit);
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  const bool numeric_units = std::all_of(units.begin(), units.end(),
                                         [](const std::string& u) { return parse_double(u).has_value(); });
  if (numeric_units) {
    std::stable_sort(units.begin(), units.end(), [](const std::string& a, const std::string& b) {
      return *parse_double(a) < *parse_double(b);
    });
  }
  std::map<double, std::string> times;
  for (const auto& r : rows) times.emplace(r.time, r.time_text);

  std::map<std::string, Index> unit_index;
  for (std::size_t i = 0; i < units.size(); ++i) unit_index[units[i]] = static_cast<Index>(i);
  std::map<double, Index> time_index;
  {
    Index t = 0;
    for (const auto& kv : times) time_index[kv.first] = t++;
  }

  const Index n = static_cast<Index>(units.size());
  const Index tt = static_cast<Index>(times.size());
  const std::size_t nv = value_cols.size();
  std::vector<Eigen::MatrixXd> cells(nv, Eigen::MatrixXd::Zero(n, tt));
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, tt, false);
  for (const auto& r : rows) {
    const Index i = unit_index.at(r.unit);
    const Index t = time_index.at(r.time);
    if (seen(i, t)) {
      throw DuplicateKeyError("duplicate (unit, time) = (" + r.unit + ", " + r.time_text + ")",
                              r.unit, r.time_text);
    }
    seen(i, t) = true;
    for (std::size_t c = 0; c < nv; ++c) cells[c](i, t) = r.values[c];
  }
  std::vector<std::pair<std::string, std::string>> missing;
  std::vector<std::string> time_texts;
  for (const auto& kv : times) time_texts.push_back(kv.second);
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < tt; ++t) {
      if (!seen(i, t)) missing.emplace_back(units[i], time_texts[t]);
    }
  }
  if (!missing.empty()) {
    std::string msg = "unbalanced panel; missing (unit, time):";
    for (std::size_t m = 0; m < missing.size() && m < 20; ++m) {
      msg += " (" + missing[m].first + ", " + missing[m].second + ")";
    }
    if (missing.size() > 20) msg += " ... " + std::to_string(missing.size()) + " total";
    throw UnbalancedPanelError(msg, std::move(missing));
  }

  PanelDataset d;
  d.n_units = n;
  d.n_periods = tt;
  d.outcome = cells[0];
  d.treatment = cells[1];
  std::size_t next = 2;
  if (schema.instrument) d.instrument = cells[next++];
  for (const auto& c : schema.covariates) {
    d.covariates.push_back(cells[next++]);
    d.covariate_names.push_back(c);
  }
  d.unit_labels = units;
  for (const auto& kv : times) d.time_labels.push_back(kv.first);
  d.outcome_name = schema.outcome;
  d.treatment_name = schema.treatment;
  if (schema.instrument) d.instrument_name = *schema.instrument;
  d.validate();
  return d;
}

PanelDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_csv(in, schema);
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvSchema schema_of(const PanelDataset& data) {
  CsvSchema s;
  s.outcome = data.outcome_name;
  s.treatment = data.treatment_name;
  if (data.instrument) s.instrument = data.instrument_name;
  for (Index j = 0; j < data.n_covariates(); ++j) {
    s.covariates.push_back(data.covariate_names.empty() ? "x" + std::to_string(j + 1)
                                                        : data.covariate_names[j]);
  }
  return s;
}

void write_csv(std::ostream& out, const PanelDataset& data) {
  data.validate();
  const CsvSchema s = schema_of(data);
  out << "unit,time," << s.outcome << ',' << s.treatment;
  if (s.instrument) out << ',' << *s.instrument;
  for (const auto& c : s.covariates) out << ',' << c;
  out << '\n';
  for (Index i = 0; i < data.n_units; ++i) {
    for (Index t = 0; t < data.n_periods; ++t) {
      out << data.unit_labels[i] << ',' << format_number(data.time_labels[t]) << ','
          << format_number(data.outcome(i, t)) << ',' << format_number(data.treatment(i, t));
      if (data.instrument) out << ',' << format_number((*data.instrument)(i, t));
      for (const auto& x : data.covariates) out << ',' << format_number(x(i, t));
      out << '\n';
    }
  }
}

void save_csv(const std::string& path, const PanelDataset& data) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv(out, data);
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace twlasso
