#pragma once

#include "errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace isinglsi {

/// Gauss-Hermite rule for E[g(Z)], Z ~ N(0, 1): nodes and probability weights.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the probabilists'
/// Hermite polynomials, weights the squared first components of the eigenvectors.
inline GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw InvalidInput("quadrature order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order - 1);
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    rule.weights[i] = v * v;
  }
  // the exact rule is symmetric about 0; enforce it so odd moments vanish to rounding
  for (int i = 0, j = order - 1; i <= j; ++i, --j) {
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

/// Tensor-product nodes for E[g(Y)], Y ~ N(0, diag(variances)). Zero variances collapse
/// to a single node at the origin, which handles degenerate Gaussians exactly.
struct TensorNode {
  Eigen::VectorXd point;
  double weight = 0.0;
};

inline std::vector<TensorNode> gaussian_tensor_grid(const Eigen::VectorXd& variances, int order) {
  const GaussHermiteRule rule = gauss_hermite(order);
  std::vector<TensorNode> grid{{Eigen::VectorXd::Zero(variances.size()), 1.0}};
  for (Eigen::Index k = 0; k < variances.size(); ++k) {
    if (variances[k] < 0.0) throw InvalidInput("negative variance in quadrature grid");
    if (variances[k] == 0.0) continue;
    const double sd = std::sqrt(variances[k]);
    std::vector<TensorNode> next;
    next.reserve(grid.size() * rule.nodes.size());
    for (const auto& node : grid)
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        TensorNode t = node;
        t.point[k] = sd * rule.nodes[i];
        t.weight *= rule.weights[i];
        next.push_back(std::move(t));
      }
    grid = std::move(next);
  }
  return grid;
}

}  // namespace isinglsi
