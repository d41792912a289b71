#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "twlasso/numerics.hpp"

namespace twlasso {

struct BandwidthChoice {
  Index bandwidth = 1;
  double rho = 0.0;        // AR(1) coefficient after clipping
  bool degenerate = false; // zero-variance cross-sectional average series
};

/// Andrews (1991) AR(1) plug-in rule for the Bartlett kernel:
///   M = 1.8171 * (rho^2 / (1 - rho^2)^2)^(1/3) * T^(1/3) + 1, floored, >= 1,
/// where rho is the no-intercept OLS slope of the series on its first lag.
/// Only pairs at adjacent time positions enter the regression. |rho| is
/// clipped to 0.97.
BandwidthChoice andrews_bandwidth_series(const Eigen::Ref<const Eigen::VectorXd>& series,
                                         std::span<const Index> time_positions = {});

/// Rule applied to the cross-sectional averages of an N x T score matrix.
/// Throws DomainError when T < 3.
BandwidthChoice andrews_bandwidth_choice(const Eigen::Ref<const Eigen::MatrixXd>& scores,
                                         std::span<const Index> time_positions = {});

inline Index andrews_bandwidth(const Eigen::Ref<const Eigen::MatrixXd>& scores) {
  return andrews_bandwidth_choice(scores).bandwidth;
}

/// The raw formula value for a given rho and T (no flooring).
double andrews_formula(double rho, double n_periods);

}  // namespace twlasso
