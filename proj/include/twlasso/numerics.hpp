#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace twlasso {

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double normal_cdf(double x);

/// Standard normal quantile. Rational initial guess refined by Halley steps
/// on the erfc-based CDF; absolute error well below 1e-9 on (0, 1).
/// Throws DomainError outside the open unit interval.
double normal_quantile(double q);

/// Two-sided 95% critical value used for every reported interval.
inline constexpr double kZ975 = 1.959964;

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Bartlett lag window k(x) = max(1 - x, 0), x >= 0.
template <typename Scalar>
inline Scalar bartlett(Scalar x) {
  using std::abs;
  const Scalar ax = abs(x);
  return ax < Scalar(1) ? Scalar(1) - ax : Scalar(0);
}

/// Bartlett weight for integer lag m with bandwidth M.
template <typename Scalar = double>
inline Scalar bartlett_lag(Index m, Index bandwidth) {
  return bartlett(Scalar(m) / Scalar(bandwidth));
}

/// Kernel-weighted long-run sum  sum_t sum_s k(|t-s|/M) x_t x_s  of a series
/// observed at consecutive integer times.
template <typename Derived>
typename Derived::Scalar bartlett_long_run_sum(const Eigen::MatrixBase<Derived>& x,
                                               Index bandwidth) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  Scalar total = x.squaredNorm();
  for (Index m = 1; m < bandwidth && m < n; ++m) {
    const Scalar w = bartlett_lag<Scalar>(m, bandwidth);
    total += Scalar(2) * w * x.head(n - m).dot(x.tail(n - m));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct OlsResult {
  Eigen::VectorXd coefficients;
  Index rank = 0;
  bool rank_deficient = false;
};

/// Least squares via a complete orthogonal decomposition. Rank-deficient
/// designs get the minimum-norm solution and rank_deficient = true.
OlsResult ols(const Eigen::Ref<const Eigen::MatrixXd>& design,
              const Eigen::Ref<const Eigen::VectorXd>& response);

/// Solves the symmetric PSD normal equations  gram * b = rhs. Falls back to
/// an eigen pseudo-inverse (minimum-norm) when gram is numerically singular.
OlsResult solve_normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                                 const Eigen::Ref<const Eigen::VectorXd>& rhs);

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Reproducible random stream keyed by (base_seed, stream_id). The engine
/// seed is a SplitMix64 hash of both keys, so streams for different ids
/// never share state and can be created in any order.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derived stream for a sub-task (e.g. a fold inside a replication).
  RngStream substream(std::uint64_t id) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). Unbiased (rejection sampling).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Draw from N(0, Sigma) with Sigma_jk = base^{|j-k|}, via the stationary
/// AR(1) recursion across coordinates. O(p) per draw.
Eigen::VectorXd toeplitz_gaussian(Index p, double base, RngStream& rng);

}  // namespace twlasso
