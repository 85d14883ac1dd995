#pragma once

#include "errors.hpp"
#include "model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace isinglsi {

/// Site caps for exhaustive enumeration. Scalar observables keep O(2^n) doubles,
/// matrix-valued ones O(2^n n) work per entry pair and the generator O(2^n n) rates.
struct EnumerationLimits {
  int scalar_cap = 20;
  int matrix_cap = 14;

  void check_scalar(int n) const {
    if (n > scalar_cap)
      throw InvalidInput(std::to_string(n) + " sites exceeds the enumeration cap of " +
                         std::to_string(scalar_cap));
  }
  void check_matrix(int n) const {
    if (n > matrix_cap)
      throw InvalidInput(std::to_string(n) + " sites exceeds the matrix-observable cap of " +
                         std::to_string(matrix_cap));
  }
};

inline void warn_if_raised(const EnumerationLimits& limits) {
  const EnumerationLimits defaults;
  if (limits.scalar_cap > defaults.scalar_cap || limits.matrix_cap > defaults.matrix_cap)
    std::cerr << "warning: enumeration caps raised above defaults (" << defaults.scalar_cap << "/"
              << defaults.matrix_cap << "); memory use grows as 2^n\n";
}

using Config = std::uint64_t;

/// Spin of site x in configuration s: bit set means +1.
inline int spin(Config s, int x) { return ((s >> x) & 1U) ? 1 : -1; }

inline int magnetization(Config s, int n) {
  return 2 * std::popcount(s & ((Config{1} << n) - 1)) - n;
}

namespace detail {

/// Running log-sum-exp accumulator.
struct LogSumExp {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double v) {
    if (v <= max) {
      sum += std::exp(v - max);
    } else {
      sum = sum * std::exp(max - v) + 1.0;
      max = v;
    }
  }
  void merge(const LogSumExp& o) {
    if (o.sum == 0.0) return;
    if (o.max <= max) {
      sum += o.sum * std::exp(o.max - max);
    } else {
      sum = sum * std::exp(max - o.max) + o.sum;
      max = o.max;
    }
  }
  double value() const { return max + std::log(sum); }
};

/// Number of equal blocks the 2^n states are split into for parallel passes. Fixed
/// independently of the thread count so reductions are reproducible.
inline std::size_t block_count(std::size_t states) { return std::min<std::size_t>(states, 64); }

/// Quadratic form (s, A s) for configuration s.
inline double quadratic_form(const Eigen::MatrixXd& A, Config s) {
  const int n = static_cast<int>(A.rows());
  double q = 0.0;
  for (int x = 0; x < n; ++x) {
    double row = 0.0;
    for (int y = 0; y < n; ++y) row += A(x, y) * spin(s, y);
    q += spin(s, x) * row;
  }
  return q;
}

/// Visits all configurations in Gray-code order block by block, handing the callback
/// (configuration, (s,As), (f,s)) with both sums updated incrementally in O(n).
template <class Visit>
void gray_code_sweep(const Eigen::MatrixXd& A, const Eigen::VectorXd& f, Visit&& visit) {
  const int n = static_cast<int>(A.rows());
  const std::size_t states = std::size_t{1} << n;
  const std::size_t blocks = block_count(states);
  const std::size_t block_size = states / blocks;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * block_size;
    Config s = begin ^ (begin >> 1);
    Eigen::VectorXd local(n);  // (A s)_x
    Eigen::VectorXd sigma(n);
    for (int x = 0; x < n; ++x) sigma[x] = spin(s, x);
    local.noalias() = A * sigma;
    double quad = sigma.dot(local);
    double lin = f.dot(sigma);
    visit(static_cast<std::size_t>(b), s, quad, lin);
    for (std::size_t i = begin + 1; i < begin + block_size; ++i) {
      const int x = std::countr_zero(i);
      const double delta = -2.0 * sigma[x];
      quad += 2.0 * delta * local[x] + A(x, x) * delta * delta;
      lin += f[x] * delta;
      local += delta * A.col(x);
      sigma[x] = -sigma[x];
      s ^= Config{1} << x;
      visit(static_cast<std::size_t>(b), s, quad, lin);
    }
  }
}

/// Deterministic blocked sum of fn(s) over all states (fixed block order).
template <class Fn>
double blocked_sum(std::size_t states, Fn&& fn) {
  const std::size_t blocks = block_count(states);
  const std::size_t block_size = states / blocks;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    double acc = 0.0;
    const std::size_t begin = static_cast<std::size_t>(b) * block_size;
    for (std::size_t s = begin; s < begin + block_size; ++s) acc += fn(static_cast<Config>(s));
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace detail

/// Ising measure at inverse temperature t and field f, tabulated over all 2^n
/// configurations: weights exp(-(t/2)(s,As) + (f,s)) kept in log form.
class ExactEnsemble {
 public:
  ExactEnsemble(const Eigen::MatrixXd& A, double t, Eigen::VectorXd f,
                const EnumerationLimits& limits = {})
      : n_(static_cast<int>(A.rows())), t_(t), field_(std::move(f)) {
    if (n_ <= 0) throw InvalidInput("empty coupling matrix");
    limits.check_scalar(n_);
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("inverse temperature must be >= 0");
    if (field_.size() == 0) field_ = Eigen::VectorXd::Zero(n_);
    if (field_.size() != n_) throw InvalidInput("field dimension does not match coupling");
    if (!field_.allFinite()) throw InvalidInput("field has non-finite entries");

    const std::size_t states = std::size_t{1} << n_;
    log_weights_.resize(states);
    std::vector<detail::LogSumExp> partial(detail::block_count(states));
    detail::gray_code_sweep(A, field_, [&](std::size_t block, Config s, double quad, double lin) {
      const double w = -0.5 * t * quad + lin;
      log_weights_[s] = w;
      partial[block].add(w);
    });
    detail::LogSumExp total;
    for (const auto& p : partial) total.merge(p);
    log_z_ = total.value();

    probabilities_.resize(states);
    for (std::size_t s = 0; s < states; ++s) probabilities_[s] = std::exp(log_weights_[s] - log_z_);
  }

  int sites() const { return n_; }
  std::size_t states() const { return probabilities_.size(); }
  double inverse_temperature() const { return t_; }
  const Eigen::VectorXd& field() const { return field_; }
  double log_partition() const { return log_z_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  double probability(Config s) const { return probabilities_[s]; }
  double log_probability(Config s) const { return log_weights_[s] - log_z_; }

  /// Sum over configurations of p(s) * observable(s).
  template <class Observable>
  double expectation(Observable&& observable) const {
    const double total = detail::blocked_sum(
        states(), [&](Config s) { return probabilities_[s] * observable(s); });
    if (!std::isfinite(total)) throw InvalidInput("observable returned a non-finite value");
    return total;
  }

  /// E[F] for F given as a table over configurations.
  double expectation(const Eigen::VectorXd& table) const {
    return detail::blocked_sum(states(), [&](Config s) { return probabilities_[s] * table[static_cast<Eigen::Index>(s)]; });
  }

  Eigen::VectorXd mean_spins() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n_);
    for (std::size_t s = 0; s < states(); ++s)
      for (int x = 0; x < n_; ++x) m[x] += probabilities_[s] * spin(s, x);
    return m;
  }

  /// Matrix of E[s_x s_y].
  Eigen::MatrixXd two_point() const {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::VectorXd sigma(n_);
    for (std::size_t s = 0; s < states(); ++s) {
      for (int x = 0; x < n_; ++x) sigma[x] = spin(s, x);
      c.selfadjointView<Eigen::Lower>().rankUpdate(sigma, probabilities_[s]);
    }
    Eigen::MatrixXd full = c.selfadjointView<Eigen::Lower>();
    return full;
  }

 private:
  int n_;
  double t_;
  Eigen::VectorXd field_;
  std::vector<double> log_weights_;
  std::vector<double> probabilities_;
  double log_z_ = 0.0;
};

inline ExactEnsemble build_ensemble(const CouplingMatrix& A, double t, const Eigen::VectorXd& f,
                                    const EnumerationLimits& limits = {}) {
  return ExactEnsemble(A.A, t, f, limits);
}

/// Truncated correlations E(s_x s_y) - E(s_x)E(s_y) at inverse temperature t, field f.
inline Eigen::MatrixXd truncated_correlation(const Eigen::MatrixXd& A, double t,
                                             const Eigen::VectorXd& f,
                                             const EnumerationLimits& limits = {}) {
  limits.check_matrix(static_cast<int>(A.rows()));
  const ExactEnsemble ens(A, t, f, limits);
  const Eigen::VectorXd m = ens.mean_spins();
  Eigen::MatrixXd sigma = ens.two_point() - m * m.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

struct Susceptibility {
  double value = 0.0;
  int row = 0;  ///< site attaining the maximum row sum
  Eigen::VectorXd row_sums;
};

/// Zero-field quantities as a function of inverse temperature, with the per-configuration
/// energy and magnetization tabulated once so repeated evaluations on a t-grid are cheap.
class SusceptibilityProfile {
 public:
  explicit SusceptibilityProfile(const Eigen::MatrixXd& A, const EnumerationLimits& limits = {})
      : n_(static_cast<int>(A.rows())) {
    if (n_ <= 0) throw InvalidInput("empty coupling matrix");
    limits.check_scalar(n_);
    const std::size_t states = std::size_t{1} << n_;
    quad_.resize(states);
    detail::gray_code_sweep(A, Eigen::VectorXd::Zero(n_),
                            [&](std::size_t, Config s, double quad, double) { quad_[s] = quad; });
  }

  int sites() const { return n_; }

  Susceptibility evaluate(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("inverse temperature must be >= 0");
    const std::size_t states = quad_.size();
    double max_w = -std::numeric_limits<double>::infinity();
    for (double q : quad_) max_w = std::max(max_w, -0.5 * t * q);
    double z = 0.0;
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(n_);
    for (std::size_t s = 0; s < states; ++s) {
      const double w = std::exp(-0.5 * t * quad_[s] - max_w);
      z += w;
      const double wm = w * magnetization(s, n_);
      for (int x = 0; x < n_; ++x) rows[x] += spin(s, x) * wm;
    }
    Susceptibility out;
    out.row_sums = rows / z;
    out.value = out.row_sums.maxCoeff(&out.row);
    return out;
  }

  double operator()(double t) const { return evaluate(t).value; }

 private:
  int n_;
  std::vector<double> quad_;
};

inline Susceptibility susceptibility_detail(const Eigen::MatrixXd& A, double t,
                                            const EnumerationLimits& limits = {}) {
  return SusceptibilityProfile(A, limits).evaluate(t);
}

/// chi_t = max_x sum_y E_{t,0}(s_x s_y).
inline double susceptibility(const CouplingMatrix& A, double t, const EnumerationLimits& limits = {}) {
  return susceptibility_detail(A.A, t, limits).value;
}

/// Spectral radius of the zero-field two-point matrix; never exceeds the susceptibility.
inline double two_point_spectral_radius(const Eigen::MatrixXd& A, double t,
                                        const EnumerationLimits& limits = {}) {
  limits.check_matrix(static_cast<int>(A.rows()));
  const ExactEnsemble ens(A, t, Eigen::VectorXd::Zero(A.rows()), limits);
  return spectral_radius(ens.two_point());
}

}  // namespace isinglsi
