#include "twlasso/numerics.hpp"

#include <array>
#include <limits>

#include "twlasso/errors.hpp"

namespace twlasso {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation (relative error ~1.2e-9).
double quantile_initial(double q) {
  constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                       -2.759285104469687e+02, 1.383577518672690e+02,
                                       -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                       -1.556989798598866e+02, 6.680131188771972e+01,
                                       -1.328068155288572e+01};
  constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                       -2.400758277161838e+00, -2.549732539343734e+00,
                                       4.374664141464968e+00,  2.938163982698783e+00};
  constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                       2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  if (q < lo) {
    const double r = std::sqrt(-2.0 * std::log(q));
    return (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  if (q > 1.0 - lo) {
    const double r = std::sqrt(-2.0 * std::log1p(-q));
    return -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  const double s = q - 0.5;
  const double r = s * s;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("normal_quantile: probability must lie in (0, 1)");
  }
  if (q == 0.5) return 0.0;
  // Work in the lower tail so the CDF residual keeps full relative precision.
  const bool upper = q > 0.5;
  const double p = upper ? 1.0 - q : q;
  double x = quantile_initial(p);
  for (int it = 0; it < 2; ++it) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return upper ? -x : x;
}

OlsResult ols(const Eigen::Ref<const Eigen::MatrixXd>& design,
              const Eigen::Ref<const Eigen::VectorXd>& response) {
  if (design.rows() != response.size()) {
    throw InputError("ols: design rows and response length differ");
  }
  OlsResult out;
  if (design.cols() == 0) {
    out.coefficients.resize(0);
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  out.coefficients = cod.solve(response);
  out.rank = cod.rank();
  out.rank_deficient = out.rank < design.cols();
  return out;
}

OlsResult solve_normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                                 const Eigen::Ref<const Eigen::VectorXd>& rhs) {
  OlsResult out;
  const Index k = gram.rows();
  if (k == 0) {
    out.coefficients.resize(0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double cutoff = top * 1e-10 * static_cast<double>(k);
  Index rank = 0;
  for (Index i = 0; i < k; ++i) rank += ev(i) > cutoff ? 1 : 0;
  out.rank = rank;
  out.rank_deficient = rank < k;
  if (!out.rank_deficient) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    out.coefficients = ldlt.solve(rhs);
    return out;
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::VectorXd proj = v.transpose() * rhs;
  for (Index i = 0; i < k; ++i) proj(i) = ev(i) > cutoff ? proj(i) / ev(i) : 0.0;
  out.coefficients = v * proj;
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : base_seed_(base_seed),
      stream_id_(stream_id),
      engine_(splitmix64(splitmix64(base_seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL))) {}

RngStream RngStream::substream(std::uint64_t id) const {
  return RngStream(splitmix64(base_seed_ ^ (stream_id_ * 0x9e3779b97f4a7c15ULL)), id);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Eigen::VectorXd toeplitz_gaussian(Index p, double base, RngStream& rng) {
  if (!(std::abs(base) < 1.0)) throw DomainError("toeplitz_gaussian: |base| must be < 1");
  Eigen::VectorXd x(p);
  if (p == 0) return x;
  const double innov = std::sqrt(1.0 - base * base);
  x(0) = rng.normal();
  for (Index j = 1; j < p; ++j) x(j) = base * x(j - 1) + innov * rng.normal();
  return x;
}

}  // namespace twlasso
