#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace isinglsi {

enum class SpectrumEnd { smallest, largest };

struct LanczosOptions {
  int max_iterations = 400;
  /// Stop when the Ritz residual ||S v - theta v|| drops below tolerance * max(1, |theta|).
  double tolerance = 1e-11;
  std::uint64_t seed = 12345;
};

struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline void project_out(Eigen::VectorXd& w, std::span<const Eigen::VectorXd> basis) {
  for (const auto& b : basis) w -= b.dot(w) * b;
}

}  // namespace detail

/// Extreme eigenpair of a symmetric operator by Lanczos with full reorthogonalization.
///
/// `apply(x, y)` must write S*x into y. Vectors in `deflate` must be orthonormal; the
/// search is restricted to their orthogonal complement, which is how the stationary
/// direction of a reversible generator is removed before asking for the gap.
template <class Apply>
LanczosResult lanczos_extreme(Apply&& apply, Eigen::Index dim, SpectrumEnd end,
                              const LanczosOptions& opts = {},
                              std::span<const Eigen::VectorXd> deflate = {}) {
  LanczosResult out;
  const Eigen::Index free_dim = dim - static_cast<Eigen::Index>(deflate.size());
  if (free_dim <= 0) return out;
  const Eigen::Index m_max = std::min<Eigen::Index>(opts.max_iterations, free_dim);

  Eigen::MatrixXd basis(dim, m_max);
  std::vector<double> alpha, beta;
  alpha.reserve(m_max);
  beta.reserve(m_max);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  detail::project_out(v, deflate);
  v.normalize();

  Eigen::VectorXd w(dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  Eigen::Index ritz_index = 0;

  for (Eigen::Index j = 0; j < m_max; ++j) {
    basis.col(j) = v;
    apply(v, w);
    const double a = v.dot(w);
    alpha.push_back(a);
    w -= a * v;
    if (j > 0) w -= beta.back() * basis.col(j - 1);
    // two passes of classical Gram-Schmidt keep the basis orthogonal to rounding level
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      detail::project_out(w, deflate);
    }
    const double b = w.norm();

    const Eigen::Index k = j + 1;
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), k);
    Eigen::VectorXd sub(std::max<Eigen::Index>(k - 1, 0));
    for (Eigen::Index i = 0; i + 1 < k; ++i) sub[i] = beta[i];
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    ritz_index = end == SpectrumEnd::smallest ? 0 : k - 1;
    const double theta = tri.eigenvalues()[ritz_index];
    const double residual = std::abs(b * tri.eigenvectors()(k - 1, ritz_index));

    out.value = theta;
    out.residual = residual;
    out.iterations = static_cast<int>(k);
    if (residual <= opts.tolerance * std::max(1.0, std::abs(theta)) || k == free_dim ||
        b <= 1e-14 * std::max(1.0, std::abs(theta))) {
      out.converged = true;
      break;
    }
    if (k == m_max) break;
    beta.push_back(b);
    v = w / b;
  }

  const Eigen::Index k = out.iterations;
  out.vector = basis.leftCols(k) * tri.eigenvectors().col(ritz_index);
  out.vector.normalize();
  return out;
}

}  // namespace isinglsi
