#include "twlasso/bandwidth.hpp"

#include <algorithm>
#include <cmath>

#include "twlasso/errors.hpp"

namespace twlasso {

double andrews_formula(double rho, double n_periods) {
  const double r2 = rho * rho;
  return 1.8171 * std::cbrt(r2 / ((1.0 - r2) * (1.0 - r2))) * std::cbrt(n_periods) + 1.0;
}

BandwidthChoice andrews_bandwidth_series(const Eigen::Ref<const Eigen::VectorXd>& series,
                                         std::span<const Index> time_positions) {
  const Index n = series.size();
  if (!time_positions.empty() && static_cast<Index>(time_positions.size()) != n) {
    throw InputError("andrews_bandwidth: time positions do not match series length");
  }
  double num = 0.0;
  double den = 0.0;
  for (Index t = 1; t < n; ++t) {
    if (!time_positions.empty() && time_positions[t] - time_positions[t - 1] != 1) continue;
    num += series(t) * series(t - 1);
    den += series(t - 1) * series(t - 1);
  }
  BandwidthChoice out;
  if (!(den > 0.0) || !std::isfinite(num / den)) {
    out.degenerate = true;
    return out;
  }
  out.rho = std::clamp(num / den, -0.97, 0.97);
  const double m = andrews_formula(out.rho, static_cast<double>(n));
  out.bandwidth = std::max<Index>(1, static_cast<Index>(std::floor(m)));
  return out;
}

BandwidthChoice andrews_bandwidth_choice(const Eigen::Ref<const Eigen::MatrixXd>& scores,
                                         std::span<const Index> time_positions) {
  if (scores.cols() < 3) throw DomainError("andrews_bandwidth: need T >= 3 periods");
  const Eigen::VectorXd avg = scores.colwise().mean().transpose();
  return andrews_bandwidth_series(avg, time_positions);
}

}  // namespace twlasso
