#pragma once

// Naive reference computations used only by the tests. Everything here is written
// directly from the definitions, without the Gray-code or log-domain machinery.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline std::vector<int> spins_of(unsigned s, int n) {
  std::vector<int> sigma(n);
  for (int x = 0; x < n; ++x) sigma[x] = (s >> x) & 1U ? 1 : -1;
  return sigma;
}

/// Boltzmann probabilities exp(-(t/2)(s,As) + (f,s)) / Z by a double loop.
inline std::vector<double> probabilities(const Eigen::MatrixXd& A, double t, const Eigen::VectorXd& f) {
  const int n = static_cast<int>(A.rows());
  std::vector<double> w(1U << n);
  double z = 0.0;
  for (unsigned s = 0; s < w.size(); ++s) {
    const auto sigma = spins_of(s, n);
    double quad = 0.0, lin = 0.0;
    for (int x = 0; x < n; ++x) {
      lin += f[x] * sigma[x];
      for (int y = 0; y < n; ++y) quad += sigma[x] * A(x, y) * sigma[y];
    }
    w[s] = std::exp(-0.5 * t * quad + lin);
    z += w[s];
  }
  for (auto& v : w) v /= z;
  return w;
}

inline double expectation(const Eigen::MatrixXd& A, double t, const Eigen::VectorXd& f,
                          const std::function<double(const std::vector<int>&)>& obs) {
  const auto p = probabilities(A, t, f);
  const int n = static_cast<int>(A.rows());
  double acc = 0.0;
  for (unsigned s = 0; s < p.size(); ++s) acc += p[s] * obs(spins_of(s, n));
  return acc;
}

inline Eigen::MatrixXd truncated(const Eigen::MatrixXd& A, double t, const Eigen::VectorXd& f) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd c(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const double xy = expectation(A, t, f, [&](const auto& s) { return double(s[x] * s[y]); });
      const double mx = expectation(A, t, f, [&](const auto& s) { return double(s[x]); });
      const double my = expectation(A, t, f, [&](const auto& s) { return double(s[y]); });
      c(x, y) = xy - mx * my;
    }
  return c;
}

inline double susceptibility(const Eigen::MatrixXd& A, double t) {
  const int n = static_cast<int>(A.rows());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  double best = -1e300;
  for (int x = 0; x < n; ++x) {
    double row = 0.0;
    for (int y = 0; y < n; ++y)
      row += expectation(A, t, zero, [&](const auto& s) { return double(s[x] * s[y]); });
    best = std::max(best, row);
  }
  return best;
}

/// Dense generator matrix with rates (1 + mu(s^x)/mu(s))/2 written out entry by entry.
inline Eigen::MatrixXd generator(const std::vector<double>& mu, int n) {
  const int N = 1 << n;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int s = 0; s < N; ++s)
    for (int x = 0; x < n; ++x) {
      const int t = s ^ (1 << x);
      L(s, t) = 0.5 * (1.0 + mu[t] / mu[s]);
      L(s, s) -= L(s, t);
    }
  return L;
}

/// Simpson rule on [a, b] with m (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace oracle
