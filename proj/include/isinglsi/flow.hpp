#pragma once

#include "errors.hpp"
#include "exact.hpp"
#include "glauber.hpp"
#include "model.hpp"
#include "quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace isinglsi {

/// C_t = (tA + (alpha - t))^{-1} for t in [0, beta], diagonalized once in the
/// eigenbasis of A. All matrices it hands out commute with A.
class CovarianceSchedule {
 public:
  CovarianceSchedule(const Eigen::MatrixXd& A, double alpha, double beta) : A_(A), alpha_(alpha), beta_(beta) {
    if (!(beta >= 0.0)) throw InvalidInput("beta must be >= 0");
    if (!(alpha > beta)) throw InvalidInput("alpha must exceed beta");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    eigenvalues_ = es.eigenvalues();
    basis_ = es.eigenvectors();
    if (eigenvalues_[0] <= 0.0) throw InvalidInput("coupling matrix is not positive definite");
    if (eigenvalues_[eigenvalues_.size() - 1] > 1.0 + 1e-12) throw InvalidInput("coupling has norm above one");
  }

  CovarianceSchedule(const CouplingMatrix& A, double alpha, double beta) : CovarianceSchedule(A.A, alpha, beta) {}

  int sites() const { return static_cast<int>(A_.rows()); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const Eigen::MatrixXd& coupling() const { return A_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  /// Eigenvalue of C_t belonging to the eigenvalue a of A.
  double c(double t, double a) const { return 1.0 / (alpha_ - t * (1.0 - a)); }
  double c_dot(double t, double a) const {
    const double ct = c(t, a);
    return (1.0 - a) * ct * ct;
  }
  double c_ddot(double t, double a) const { return 2.0 * (1.0 - a) * c(t, a) * c_dot(t, a); }

  Eigen::MatrixXd covariance(double t) const {
    check_time(t);
    return from_spectrum([&](double a) { return c(t, a); });
  }
  Eigen::MatrixXd dot_covariance(double t) const {
    check_time(t);
    return from_spectrum([&](double a) { return c_dot(t, a); });
  }
  Eigen::MatrixXd ddot_covariance(double t) const {
    check_time(t);
    return from_spectrum([&](double a) { return c_ddot(t, a); });
  }
  /// C_t^{-1} = tA + (alpha - t) I, formed directly.
  Eigen::MatrixXd precision(double t) const {
    check_time(t);
    return t * A_ + (alpha_ - t) * Eigen::MatrixXd::Identity(sites(), sites());
  }

  /// ||C'_0|| = max_a |1 - a| / alpha^2.
  double dot_covariance_norm_at_zero() const {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) worst = std::max(worst, std::abs(c_dot(0.0, eigenvalues_[k])));
    return worst;
  }

  /// Per-eigendirection variances of C_s - C_t; directions with a = 1 are exactly zero.
  Eigen::VectorXd increment_variances(double t, double s) const {
    Eigen::VectorXd v(eigenvalues_.size());
    const double scale = c(beta_, eigenvalues_[eigenvalues_.size() - 1]);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const double d = c(s, eigenvalues_[k]) - c(t, eigenvalues_[k]);
      v[k] = d <= 1e-14 * scale ? 0.0 : d;
    }
    return v;
  }

  void check_time(double t) const {
    if (!(t >= 0.0 && t <= beta_)) throw InvalidInput("flow time outside [0, beta]");
  }

 private:
  template <class Fn>
  Eigen::MatrixXd from_spectrum(Fn&& fn) const {
    Eigen::VectorXd d(eigenvalues_.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = fn(eigenvalues_[k]);
    Eigen::MatrixXd m = basis_ * d.asDiagonal() * basis_.transpose();
    return 0.5 * (m + m.transpose());
  }

  Eigen::MatrixXd A_;
  double alpha_;
  double beta_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd basis_;
};

// ---------------------------------------------------------------------------
// Renormalised potential
//
// V_t(phi) = (phi, K phi)/2 - log sum_s exp(-(s, K s)/2 + (h + K phi, s)),  K = C_t^{-1}.
// Since (s, K s) = t (s, A s) + (alpha - t) n, the sum equals exp(-(alpha - t) n / 2)
// times the partition function of the Ising model at inverse temperature t and
// field h + K phi; that constant is kept so V_t values are absolute.

struct PotentialPoint {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

inline void check_open_time(const CovarianceSchedule& sched, double t) {
  if (!(t >= 0.0 && t < sched.beta())) throw InvalidInput("renormalised potential needs t in [0, beta)");
}

inline PotentialPoint evaluate_potential(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                                         const Eigen::VectorXd& phi, bool with_hessian = true,
                                         const EnumerationLimits& limits = {}) {
  check_open_time(sched, t);
  if (!phi.allFinite()) throw InvalidInput("phi has non-finite entries");
  const int n = sched.sites();
  const Eigen::MatrixXd K = sched.precision(t);
  const Eigen::VectorXd Kphi = K * phi;
  const Eigen::VectorXd field = (h.size() == 0 ? Eigen::VectorXd::Zero(n) : h) + Kphi;
  if (with_hessian) limits.check_matrix(n);
  const ExactEnsemble ens(sched.coupling(), t, field, limits);

  PotentialPoint out;
  out.value = 0.5 * phi.dot(Kphi) + 0.5 * (sched.alpha() - t) * n - ens.log_partition();
  const Eigen::VectorXd mean = ens.mean_spins();
  out.gradient = Kphi - K * mean;
  if (with_hessian) {
    Eigen::MatrixXd sigma = ens.two_point() - mean * mean.transpose();
    sigma = 0.5 * (sigma + sigma.transpose());
    out.hessian = K - K * sigma * K;
    out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  }
  return out;
}

inline double renormalized_potential(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                                     const Eigen::VectorXd& phi, const EnumerationLimits& limits = {}) {
  return evaluate_potential(sched, t, h, phi, false, limits).value;
}

inline Eigen::VectorXd potential_gradient(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                                          const Eigen::VectorXd& phi, const EnumerationLimits& limits = {}) {
  return evaluate_potential(sched, t, h, phi, false, limits).gradient;
}

/// He V_t(phi) = C_t^{-1} - C_t^{-1} Sigma_t(h + C_t^{-1} phi) C_t^{-1}.
inline Eigen::MatrixXd potential_hessian(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                                         const Eigen::VectorXd& phi, const EnumerationLimits& limits = {}) {
  return evaluate_potential(sched, t, h, phi, true, limits).hessian;
}

// ---------------------------------------------------------------------------
// Decomposition identities by Gauss-Hermite quadrature over the renormalised measure

struct QuadratureConfig {
  int order = 40;
  int order_step = 10;  ///< convergence is judged between order and order + order_step
  double tolerance = 1e-7;
  int max_sites = 3;
};

struct IdentityCheck {
  double residual = 0.0;  ///< relative residual at the higher order
  double lhs = 0.0;
  double rhs = 0.0;
  double order_gap = 0.0;  ///< relative change between the two quadrature orders
};

namespace detail {

/// Nodes of nu_{t,beta} ~ exp(-(phi,(C_beta - C_t)^{-1} phi)/2 - V_t(phi)): Gaussian
/// tensor nodes in the eigenbasis of A, reweighted by exp(-V_t) and normalized.
struct RenormalisedNode {
  Eigen::VectorXd phi;
  double weight = 0.0;
  Eigen::VectorXd field;  ///< h + C_t^{-1} phi
};

inline std::vector<RenormalisedNode> renormalised_nodes(const CovarianceSchedule& sched, double t,
                                                        const Eigen::VectorXd& h, int order) {
  const auto grid = gaussian_tensor_grid(sched.increment_variances(t, sched.beta()), order);
  const Eigen::MatrixXd K = sched.precision(t);
  std::vector<RenormalisedNode> nodes(grid.size());
  std::vector<double> logw(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    nodes[i].phi = sched.basis() * grid[i].point;
    nodes[i].field = h + K * nodes[i].phi;
    const double v = renormalized_potential(sched, t, h, nodes[i].phi);
    logw[i] = std::log(grid[i].weight) - v;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) total += nodes[i].weight = std::exp(logw[i] - top);
  for (auto& node : nodes) node.weight /= total;
  return nodes;
}

inline void check_quadrature_size(const CovarianceSchedule& sched, const QuadratureConfig& cfg) {
  if (sched.sites() > cfg.max_sites)
    throw InvalidInput("tensor quadrature is limited to " + std::to_string(cfg.max_sites) + " sites");
}

}  // namespace detail

/// E_{mu_{beta,h}} F against E_{nu_{t,beta}} E_{mu_{t,h + C_t^{-1} phi}} F.
/// Residual is relative to max(|lhs|, E|F|).
inline IdentityCheck verify_decomposition(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                                          const Eigen::VectorXd& F, const QuadratureConfig& cfg = {}) {
  detail::check_quadrature_size(sched, cfg);
  check_open_time(sched, t);
  const ExactEnsemble target(sched.coupling(), sched.beta(), h);
  if (F.size() != static_cast<Eigen::Index>(target.states())) throw InvalidInput("test function has wrong size");

  auto rhs_at = [&](int order) {
    double acc = 0.0;
    for (const auto& node : detail::renormalised_nodes(sched, t, h, order)) {
      const ExactEnsemble inner(sched.coupling(), t, node.field);
      acc += node.weight * inner.expectation(F);
    }
    return acc;
  };

  IdentityCheck out;
  out.lhs = target.expectation(F);
  const double scale = std::max(std::abs(out.lhs), target.expectation(Eigen::VectorXd(F.cwiseAbs())));
  const double low = rhs_at(cfg.order);
  out.rhs = rhs_at(cfg.order + cfg.order_step);
  out.order_gap = std::abs(out.rhs - low) / scale;
  out.residual = std::abs(out.rhs - out.lhs) / scale;
  if (out.order_gap > cfg.tolerance) throw NumericalFailure("decomposition quadrature did not converge");
  return out;
}

/// Ent_{mu_{beta,h}}(F) = E_{nu_{0,beta}} Ent_{mu_{0,h+alpha phi}}(F) + Ent_{nu_{0,beta}}(G),
/// G(phi) = E_{mu_{0,h+alpha phi}} F. Residual is relative to max(lhs, 1e-6 E F).
inline IdentityCheck verify_entropy_decomposition(const CovarianceSchedule& sched, const Eigen::VectorXd& h,
                                                  const Eigen::VectorXd& F, const QuadratureConfig& cfg = {}) {
  detail::check_quadrature_size(sched, cfg);
  check_open_time(sched, 0.0);
  const ExactEnsemble target(sched.coupling(), sched.beta(), h);
  if (F.size() != static_cast<Eigen::Index>(target.states())) throw InvalidInput("test function has wrong size");
  if ((F.array() < 0.0).any()) throw InvalidInput("entropy decomposition needs F >= 0");

  auto rhs_at = [&](int order) {
    const auto nodes = detail::renormalised_nodes(sched, 0.0, h, order);
    double inner_ent = 0.0, mean_g = 0.0, g_log_g = 0.0;
    for (const auto& node : nodes) {
      const ExactEnsemble product(sched.coupling(), 0.0, node.field);
      const double g = product.expectation(F);
      inner_ent += node.weight * entropy(product, F);
      mean_g += node.weight * g;
      g_log_g += node.weight * (g > 0.0 ? g * std::log(g) : 0.0);
    }
    const double outer_ent = mean_g > 0.0 ? g_log_g - mean_g * std::log(mean_g) : 0.0;
    return inner_ent + std::max(0.0, outer_ent);
  };

  IdentityCheck out;
  out.lhs = entropy(target, F);
  const double scale = std::max(out.lhs, 1e-6 * target.expectation(F));
  const double low = rhs_at(cfg.order);
  out.rhs = rhs_at(cfg.order + cfg.order_step);
  out.order_gap = std::abs(out.rhs - low) / scale;
  out.residual = std::abs(out.rhs - out.lhs) / scale;
  if (out.order_gap > cfg.tolerance) throw NumericalFailure("entropy decomposition quadrature did not converge");
  return out;
}

/// Gaussian convolution identity, checked pointwise with the normalizing constant explicit:
///   E_{phi ~ N(0, C_s - C_t)} exp(-(x - phi, C_t^{-1}(x - phi))/2)
///     = sqrt(det C_t / det C_s) exp(-(x, C_s^{-1} x)/2).
/// Samples 0 <= t < s <= beta and x in [-2, 2]^n; returns the worst relative residual.
inline IdentityCheck verify_convolution(const CovarianceSchedule& sched, int samples, std::uint64_t seed,
                                        const QuadratureConfig& cfg = {}) {
  detail::check_quadrature_size(sched, cfg);
  const int n = sched.sites();
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  IdentityCheck worst;
  worst.residual = -1.0;
  for (int i = 0; i < samples; ++i) {
    double t = sched.beta() * uniform(), s = sched.beta() * uniform();
    if (t > s) std::swap(t, s);
    if (s == t) continue;
    Eigen::VectorXd x(n);
    for (int k = 0; k < n; ++k) x[k] = 4.0 * uniform() - 2.0;

    const Eigen::MatrixXd Kt = sched.precision(t), Ks = sched.precision(s);
    double log_det_ratio = 0.0;
    for (Eigen::Index k = 0; k < sched.eigenvalues().size(); ++k)
      log_det_ratio += std::log(sched.c(t, sched.eigenvalues()[k]) / sched.c(s, sched.eigenvalues()[k]));
    const double expected = std::exp(0.5 * log_det_ratio - 0.5 * x.dot(Ks * x));

    auto quad = [&](int order) {
      double acc = 0.0;
      for (const auto& node : gaussian_tensor_grid(sched.increment_variances(t, s), order)) {
        const Eigen::VectorXd d = x - sched.basis() * node.point;
        acc += node.weight * std::exp(-0.5 * d.dot(Kt * d));
      }
      return acc;
    };
    const double low = quad(cfg.order), high = quad(cfg.order + cfg.order_step);
    IdentityCheck c;
    c.lhs = expected;
    c.rhs = high;
    c.order_gap = std::abs(high - low) / expected;
    c.residual = std::abs(high - expected) / expected;
    if (c.residual > worst.residual) worst = c;
  }
  worst.residual = std::max(worst.residual, 0.0);
  return worst;
}

// ---------------------------------------------------------------------------
// Quadratic-form criterion

/// Smallest eigenvalue of C'_t He V_t(phi) C'_t - C''_t / 2 + chi_t C'_t, which the
/// correlation-inequality chain predicts to be nonnegative.
inline double criterion_slack(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                              const Eigen::VectorXd& phi, double chi_t, const EnumerationLimits& limits = {}) {
  const Eigen::MatrixXd hess = potential_hessian(sched, t, h, phi, limits);
  const Eigen::MatrixXd cd = sched.dot_covariance(t);
  const Eigen::MatrixXd cdd = sched.ddot_covariance(t);
  Eigen::MatrixXd m = cd * hess * cd - 0.5 * cdd + chi_t * cd;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

inline double verify_criterion_matrix_inequality(const CovarianceSchedule& sched, double t, const Eigen::VectorXd& h,
                                                 const Eigen::VectorXd& phi, const EnumerationLimits& limits = {}) {
  if (!(t > 0.0 && t < sched.beta())) throw InvalidInput("criterion check needs t in (0, beta)");
  return criterion_slack(sched, t, h, phi, susceptibility_detail(sched.coupling(), t, limits).value, limits);
}

// ---------------------------------------------------------------------------
// Certified enclosure of 1/2 + int_0^beta exp(2 int_0^t chi_s ds) dt

struct Enclosure {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

/// Enclosure of int_0^beta exp(2 int_0^t chi) dt from chi sampled at increasing nodes
/// t_0 = 0 < ... < t_N = beta, valid whenever chi is nondecreasing. On each cell chi is
/// bracketed by its endpoint values, and the exponential of the linear inner integral
/// is integrated exactly.
inline Enclosure exponential_integral_enclosure(const std::vector<double>& t, const std::vector<double>& chi) {
  if (t.size() != chi.size() || t.empty()) throw InvalidInput("chi grid is malformed");
  auto cell = [](double c, double h) { return c == 0.0 ? h : std::expm1(2.0 * c * h) / (2.0 * c); };
  Enclosure out;
  double inner_lo = 0.0, inner_hi = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double h = t[k + 1] - t[k];
    out.lower += std::exp(2.0 * inner_lo) * cell(chi[k], h);
    out.upper += std::exp(2.0 * inner_hi) * cell(chi[k + 1], h);
    inner_lo += h * chi[k];
    inner_hi += h * chi[k + 1];
  }
  return out;
}

struct BoundSettings {
  int initial_grid = 256;
  int max_grid = 1 << 22;
  double tolerance = 1e-6;  ///< on (upper - lower) / upper
};

struct BoundReport {
  double beta = 0.0;
  double alpha = 0.0;
  std::vector<double> grid_t;  ///< initial-resolution chi grid
  std::vector<double> grid_chi;
  int grid_intervals = 0;  ///< final resolution
  double chi_beta = 0.0;
  double lower = 0.5;
  double upper = 0.5;
  double coarse_bound = 0.5;  ///< 1/2 + beta exp(2 beta chi_beta)
  double criterion_lower = 0.0;  ///< (1/alpha^2) int_0^beta exp(2 int chi)
  double criterion_upper = 0.0;
  double dot_c0_norm = 0.0;
  double criterion_dot_c0_upper = 0.0;  ///< ||C'_0|| int_0^beta exp(2 int chi)
  bool tolerance_reached = true;
  std::vector<std::string> flags;
  BoundSettings settings;
};

/// Refines a uniform chi grid by doubling until the enclosure is tight enough. The
/// chi function must be nondecreasing on [0, beta]; that is what makes it certified.
inline BoundReport lsi_bound(const std::function<double(double)>& chi, double beta, const BoundSettings& settings = {}) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("beta must be >= 0");
  if (settings.initial_grid < 1 || settings.max_grid < settings.initial_grid)
    throw InvalidInput("invalid bound grid settings");
  BoundReport rep;
  rep.beta = beta;
  rep.settings = settings;
  rep.chi_beta = chi(beta);
  rep.coarse_bound = 0.5 + beta * std::exp(2.0 * beta * rep.chi_beta);
  if (beta == 0.0) {
    rep.grid_t = {0.0};
    rep.grid_chi = {rep.chi_beta};
    return rep;
  }

  int intervals = settings.initial_grid;
  std::vector<double> values(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) values[i] = chi(beta * i / intervals);
  rep.grid_chi = values;
  rep.grid_t.resize(values.size());
  for (int i = 0; i <= intervals; ++i) rep.grid_t[i] = beta * i / intervals;

  bool monotone = true;
  Enclosure enc;
  while (true) {
    std::vector<double> t(values.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = beta * static_cast<double>(i) / intervals;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
      if (values[i + 1] < values[i] - 1e-10 * std::abs(values[i])) monotone = false;
    enc = exponential_integral_enclosure(t, values);
    if (!std::isfinite(enc.upper)) {
      rep.flags.push_back("overflow");
      break;
    }
    if (enc.width() <= settings.tolerance * enc.upper) break;
    if (2LL * intervals > settings.max_grid) {
      rep.tolerance_reached = false;
      rep.flags.push_back("tolerance_unreached");
      break;
    }
    std::vector<double> refined(2 * static_cast<std::size_t>(intervals) + 1);
    const int next = 2 * intervals;
#pragma omp parallel for schedule(static)
    for (int i = 0; i <= next; ++i)
      refined[i] = (i % 2 == 0) ? values[i / 2] : chi(beta * i / next);
    values.swap(refined);
    intervals = next;
  }
  if (!monotone) rep.flags.push_back("chi_not_monotone");
  rep.grid_intervals = intervals;
  rep.lower = 0.5 + enc.lower;
  rep.upper = 0.5 + enc.upper;
  return rep;
}

inline void attach_criterion(BoundReport& rep, const CovarianceSchedule& sched) {
  const double a2 = sched.alpha() * sched.alpha();
  rep.alpha = sched.alpha();
  rep.criterion_lower = (rep.lower - 0.5) / a2;
  rep.criterion_upper = (rep.upper - 0.5) / a2;
  rep.dot_c0_norm = sched.dot_covariance_norm_at_zero();
  rep.criterion_dot_c0_upper = rep.dot_c0_norm * (rep.upper - 0.5);
}

/// Certified bound for an exactly enumerable model.
inline BoundReport lsi_bound(const CouplingMatrix& A, double beta, double alpha, const BoundSettings& settings = {},
                             const EnumerationLimits& limits = {}) {
  const SusceptibilityProfile profile(A.A, limits);
  auto rep = lsi_bound([&profile](double t) { return profile(t); }, beta, settings);
  attach_criterion(rep, CovarianceSchedule(A, alpha, beta));
  return rep;
}

/// The uncertified variant with chi replaced by the two-point spectral radius.
inline BoundReport lsi_bound_spectral_radius(const CouplingMatrix& A, double beta, double alpha,
                                             const BoundSettings& settings = {},
                                             const EnumerationLimits& limits = {}) {
  auto rep = lsi_bound([&](double t) { return two_point_spectral_radius(A.A, t, limits); }, beta, settings);
  attach_criterion(rep, CovarianceSchedule(A, alpha, beta));
  rep.flags.push_back("uncertified_spectral_radius");
  return rep;
}

struct CriterionBound {
  double lower = 0.0;
  double upper = 0.0;
  double dot_c0_norm = 0.0;
};

/// (1/alpha^2) int_0^beta exp(2 int_0^t chi_s ds) dt, the inverse LSI constant of the
/// renormalised measure with lambda'_t = -chi_t.
inline CriterionBound criterion_bound(const CovarianceSchedule& sched, const std::function<double(double)>& chi,
                                      const BoundSettings& settings = {}) {
  auto rep = lsi_bound(chi, sched.beta(), settings);
  attach_criterion(rep, sched);
  return {rep.criterion_lower, rep.criterion_upper, rep.dot_c0_norm};
}

/// 1/2 + alpha^2 * criterion reassembles the log-Sobolev bound.
inline Enclosure assemble_bound(const CovarianceSchedule& sched, const CriterionBound& crit) {
  const double a2 = sched.alpha() * sched.alpha();
  return {0.5 + a2 * crit.lower, 0.5 + a2 * crit.upper};
}

// ---------------------------------------------------------------------------
// Mean-field corollaries

/// Closed-form integral of the bound under chi_s <= D / (beta_c - s) (no L), or under the
/// finite-volume form chi_s <= D / (beta_c - s + L^{-2}) (with L), for 0 <= beta <= beta_c.
/// At beta = beta_c the second reduces to 1/2 + (beta_c + L^{-2})/(2D - 1)[(L^2 beta_c + 1)^{2D-1} - 1].
inline double meanfield_corollary(double D, double beta_c, double beta, std::optional<double> L = std::nullopt) {
  if (!(D > 0.5)) throw InvalidInput("mean-field exponent D must exceed 1/2");
  if (!(beta_c > 0.0)) throw InvalidInput("beta_c must be positive");
  if (!(beta >= 0.0)) throw InvalidInput("beta must be >= 0");
  const double p = 2.0 * D - 1.0;
  if (!L) {
    if (!(beta < beta_c)) throw InvalidInput("infinite-volume corollary needs beta < beta_c");
    return 0.5 + beta_c / p * (std::pow(1.0 - beta / beta_c, -p) - 1.0);
  }
  if (!(*L >= 1.0)) throw InvalidInput("L must be >= 1");
  if (beta > beta_c) throw InvalidInput("finite-volume corollary needs beta <= beta_c");
  const double shifted = beta_c + 1.0 / (*L * *L);
  return 0.5 + shifted / p * (std::pow(shifted / (shifted - beta), p) - 1.0);
}

}  // namespace isinglsi
