#pragma once

// Independent reference implementations used only by the tests. They favour
// direct loops over speed and share no code with the library.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Inverse normal CDF by bisection on erfc in long double.
inline double normal_quantile(double q) {
  long double lo = -40.0L, hi = 40.0L;
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    const long double cdf = 0.5L * std::erfc(-mid / std::sqrt(2.0L));
    if (cdf < q) lo = mid; else hi = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

inline double bartlett(double lag, double m) {
  const double x = std::abs(lag) / m;
  return x < 1.0 ? 1.0 - x : 0.0;
}

// scores[j] is an N x T matrix of v_{it,j}.
struct Weights {
  double a, g, e, w2;
};

inline Weights feasible(const Eigen::MatrixXd& v, int m) {
  const int n = static_cast<int>(v.rows());
  const int t = static_cast<int>(v.cols());
  std::vector<double> abar(n, 0.0), gbar(t, 0.0);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t; ++s) abar[i] += v(i, s) / t;
  for (int s = 0; s < t; ++s)
    for (int i = 0; i < n; ++i) gbar[s] += v(i, s) / n;
  const double scale = 1.0 / (double(n) * t * t);
  Weights w{0, 0, 0, 0};
  for (int i = 0; i < n; ++i) {
    double rs = 0.0;
    for (int s = 0; s < t; ++s) rs += v(i, s);
    w.a += scale * rs * rs;
  }
  for (int s = 0; s < t; ++s) {
    for (int r = 0; r < t; ++r) {
      double gs = 0.0, gr = 0.0;
      for (int i = 0; i < n; ++i) {
        gs += v(i, s);
        gr += v(i, r);
      }
      w.g += scale * bartlett(s - r, m) * gs * gr;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < t; ++s) {
      for (int r = 0; r < t; ++r) {
        const double es = v(i, s) - abar[i] - gbar[s];
        const double er = v(i, r) - abar[i] - gbar[r];
        w.e += scale * bartlett(s - r, m) * es * er;
      }
    }
  }
  w.w2 = std::max(w.a - w.e, 0.0) + std::max(w.g - w.e, 0.0) + w.e;
  return w;
}

// Unscaled variance sums by explicit loops over (i, j, t, r).
struct Sums {
  double a, dk, nw;
};

inline Sums score_sums(const Eigen::MatrixXd& psi, int m) {
  const int n = static_cast<int>(psi.rows());
  const int t = static_cast<int>(psi.cols());
  Sums s{0, 0, 0};
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < t; ++a)
      for (int b = 0; b < t; ++b) s.a += psi(i, a) * psi(i, b);
  for (int a = 0; a < t; ++a)
    for (int b = 0; b < t; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.dk += bartlett(a - b, m) * psi(i, a) * psi(j, b);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < t; ++a)
      for (int b = 0; b < t; ++b) s.nw += bartlett(a - b, m) * psi(i, a) * psi(i, b);
  return s;
}

}  // namespace oracle
