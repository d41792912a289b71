#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twlasso/numerics.hpp"

namespace twlasso {

/// Balanced N x T panel. Cell (i, t) of every matrix refers to unit i and
/// period t; rows of flattened objects use index i * T + t throughout.
struct PanelDataset {
  Index n_units = 0;
  Index n_periods = 0;
  Eigen::MatrixXd outcome;                    // N x T
  Eigen::MatrixXd treatment;                  // N x T
  std::optional<Eigen::MatrixXd> instrument;  // N x T, treatment when absent
  std::vector<Eigen::MatrixXd> covariates;    // p matrices, each N x T
  std::vector<std::string> unit_labels;
  std::vector<double> time_labels;

  std::string outcome_name = "y";
  std::string treatment_name = "d";
  std::string instrument_name = "z";
  std::vector<std::string> covariate_names;

  Index n_covariates() const { return static_cast<Index>(covariates.size()); }
  const Eigen::MatrixXd& instrument_or_treatment() const {
    return instrument ? *instrument : treatment;
  }

  /// Shape, finiteness and time-ordering checks. Throws InputError.
  void validate() const;
  /// validate() plus the N >= 2, T >= 4 minimum needed by the estimators.
  void require_estimable() const;
};

/// (N*T) x p design in panel row order.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  /// Column holding the unpenalized constant, if any.
  std::optional<Index> intercept_column;
  Index n_units = 0;
  Index n_periods = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool has_intercept() const { return intercept_column.has_value(); }
};

/// N x T matrix -> length N*T vector with index i * T + t.
Eigen::VectorXd to_panel_vector(const Eigen::MatrixXd& m);
/// Inverse of to_panel_vector.
Eigen::MatrixXd from_panel_vector(const Eigen::Ref<const Eigen::VectorXd>& v, Index n_units,
                                  Index n_periods);

/// Covariates as an (N*T) x p matrix; no intercept added.
FeatureMatrix flatten(const PanelDataset& data);
/// Splits a flattened design back into per-column N x T matrices.
std::vector<Eigen::MatrixXd> unflatten(const FeatureMatrix& features);

/// Column-role mapping for CSV ingestion. `unit` and `time` columns are
/// always required.
struct CsvSchema {
  std::string outcome = "y";
  std::string treatment = "d";
  std::optional<std::string> instrument;
  std::vector<std::string> covariates;
};

PanelDataset read_csv(std::istream& in, const CsvSchema& schema);
PanelDataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes the dataset in the same schema that load_csv accepts, numbers at
/// 17 significant digits.
void write_csv(std::ostream& out, const PanelDataset& data);
void save_csv(const std::string& path, const PanelDataset& data);
/// Schema matching what write_csv emits for `data`.
CsvSchema schema_of(const PanelDataset& data);

std::string format_number(double x);

}  // namespace twlasso
