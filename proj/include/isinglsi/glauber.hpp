#pragma once

#include "errors.hpp"
#include "exact.hpp"
#include "lanczos.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace isinglsi {

/// Single-flip Glauber generator whose Dirichlet form is
///   D(F) = 1/2 sum_x E_mu[(F(s) - F(s^x))^2].
/// Rates c_x(s) = (1 + mu(s^x)/mu(s)) / 2, so mu(s) c_x(s) = (mu(s) + mu(s^x)) / 2.
class GlauberGenerator {
 public:
  GlauberGenerator(const Eigen::MatrixXd& A, double beta, const Eigen::VectorXd& h,
                   const EnumerationLimits& limits = {})
      : ensemble_(checked(A, limits), beta, h, limits) {
    const int n = ensemble_.sites();
    const std::size_t states = ensemble_.states();
    const auto& lw = ensemble_.log_weights();
    rates_.resize(states * static_cast<std::size_t>(n));
    diagonal_.resize(states);
    for (std::size_t s = 0; s < states; ++s) {
      double out = 0.0;
      for (int x = 0; x < n; ++x) {
        const double c = 0.5 * (1.0 + std::exp(lw[s ^ (Config{1} << x)] - lw[s]));
        if (!std::isfinite(c)) throw NumericalFailure("flip rate overflow; beta too large");
        rates_[s * n + x] = c;
        out += c;
      }
      diagonal_[s] = -out;
    }
  }

  int sites() const { return ensemble_.sites(); }
  std::size_t states() const { return ensemble_.states(); }
  const ExactEnsemble& ensemble() const { return ensemble_; }
  const std::vector<double>& stationary() const { return ensemble_.probabilities(); }

  /// Off-diagonal entry L(s, s^x).
  double rate(Config s, int x) const { return rates_[s * sites() + x]; }
  double diagonal(Config s) const { return diagonal_[s]; }

  /// (L F)(s) = sum_x c_x(s) (F(s^x) - F(s)).
  Eigen::VectorXd apply(const Eigen::VectorXd& F) const {
    Eigen::VectorXd out(F.size());
    apply(F, out);
    return out;
  }

  void apply(const Eigen::VectorXd& F, Eigen::VectorXd& out) const {
    const int n = sites();
    const auto states = static_cast<std::ptrdiff_t>(this->states());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < states; ++s) {
      double acc = 0.0;
      const double fs = F[s];
      for (int x = 0; x < n; ++x) acc += rates_[s * n + x] * (F[s ^ (std::ptrdiff_t{1} << x)] - fs);
      out[s] = acc;
    }
  }

  /// S v with S = Pi^{1/2} (-L) Pi^{-1/2}; S(s, s^x) = -cosh((log mu(s) - log mu(s^x)) / 2).
  void apply_symmetrized(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    const int n = sites();
    const auto& lw = ensemble_.log_weights();
    const auto states = static_cast<std::ptrdiff_t>(this->states());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < states; ++s) {
      double acc = -diagonal_[s] * v[s];
      for (int x = 0; x < n; ++x) {
        const std::ptrdiff_t t = s ^ (std::ptrdiff_t{1} << x);
        acc -= std::cosh(0.5 * (lw[s] - lw[t])) * v[t];
      }
      out[s] = acc;
    }
  }

  Eigen::MatrixXd symmetrized_dense() const {
    const auto N = static_cast<Eigen::Index>(states());
    const int n = sites();
    const auto& lw = ensemble_.log_weights();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index s = 0; s < N; ++s) {
      S(s, s) = -diagonal_[s];
      for (int x = 0; x < n; ++x) {
        const Eigen::Index t = s ^ (Eigen::Index{1} << x);
        S(s, t) = -std::cosh(0.5 * (lw[s] - lw[t]));
      }
    }
    return S;
  }

  /// Largest relative violation of mu(s) L(s,s^x) = mu(s^x) L(s^x,s).
  double detailed_balance_defect() const {
    const int n = sites();
    const auto& p = stationary();
    double worst = 0.0;
    for (std::size_t s = 0; s < states(); ++s)
      for (int x = 0; x < n; ++x) {
        const std::size_t t = s ^ (std::size_t{1} << x);
        const double a = p[s] * rate(s, x), b = p[t] * rate(t, x);
        worst = std::max(worst, std::abs(a - b) / std::max(a, b));
      }
    return worst;
  }

 private:
  static const Eigen::MatrixXd& checked(const Eigen::MatrixXd& A, const EnumerationLimits& limits) {
    limits.check_matrix(static_cast<int>(A.rows()));
    return A;
  }

  ExactEnsemble ensemble_;
  std::vector<double> rates_;
  std::vector<double> diagonal_;
};

inline GlauberGenerator build_generator(const CouplingMatrix& A, double beta, const Eigen::VectorXd& h,
                                        const EnumerationLimits& limits = {}) {
  return GlauberGenerator(A.A, beta, h, limits);
}

/// Glauber Dirichlet form 1/2 sum_x E_mu[(F(s) - F(s^x))^2].
inline double dirichlet_form(const GlauberGenerator& g, const Eigen::VectorXd& F) {
  const int n = g.sites();
  const auto& p = g.stationary();
  return 0.5 * detail::blocked_sum(g.states(), [&](Config s) {
    double acc = 0.0;
    for (int x = 0; x < n; ++x) {
      const double d = F[static_cast<Eigen::Index>(s)] - F[static_cast<Eigen::Index>(s ^ (Config{1} << x))];
      acc += d * d;
    }
    return p[s] * acc;
  });
}

/// -<F, L F>_mu; equal to dirichlet_form for the chosen rates.
inline double generator_quadratic_form(const GlauberGenerator& g, const Eigen::VectorXd& F) {
  const Eigen::VectorXd LF = g.apply(F);
  const auto& p = g.stationary();
  return -detail::blocked_sum(g.states(), [&](Config s) {
    const auto i = static_cast<Eigen::Index>(s);
    return p[s] * F[i] * LF[i];
  });
}

namespace detail {

/// x log x - x + 1, accurate near x = 1.
inline double relative_entropy_density(double x) {
  if (x == 0.0) return 1.0;
  const double r = x - 1.0;
  if (std::abs(r) < 0.1) {
    // sum_{k>=2} (-1)^k r^k / (k (k-1))
    double term = r * r, acc = 0.0;
    for (int k = 2; k < 40; ++k) {
      acc += ((k % 2 == 0) ? 1.0 : -1.0) * term / (k * (k - 1.0));
      term *= r;
      if (std::abs(term) < 1e-18 * std::abs(acc)) break;
    }
    return acc;
  }
  return x * std::log(x) - x + 1.0;
}

}  // namespace detail

/// Ent_mu(F) = E Phi(F) - Phi(E F), Phi(x) = x log x, with 0 log 0 = 0.
inline double entropy(std::span<const double> mu, const Eigen::VectorXd& F) {
  if (static_cast<std::size_t>(F.size()) != mu.size())
    throw InvalidInput("density and measure have different sizes");
  if ((F.array() < 0.0).any()) throw InvalidInput("entropy needs a nonnegative function");
  double mean = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s) mean += mu[s] * F[static_cast<Eigen::Index>(s)];
  if (!(mean > 0.0)) throw InvalidInput("entropy needs E F > 0");
  double acc = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s)
    acc += mu[s] * detail::relative_entropy_density(F[static_cast<Eigen::Index>(s)] / mean);
  return std::max(0.0, mean * acc);
}

inline double entropy(const ExactEnsemble& mu, const Eigen::VectorXd& F) {
  return entropy(std::span<const double>(mu.probabilities()), F);
}

struct SpectralGap {
  double value = 0.0;
  /// Eigenfunction of -L for the gap, normalized so E_mu g^2 = 1 and E_mu g = 0.
  Eigen::VectorXd eigenfunction;
  bool converged = true;
};

struct GapOptions {
  int dense_max_sites = 10;
  LanczosOptions lanczos{};
};

/// Second-smallest eigenvalue of -L, computed on the mu^{1/2}-symmetrized operator.
inline SpectralGap spectral_gap(const GlauberGenerator& g, const GapOptions& opts = {}) {
  if (g.detailed_balance_defect() > 1e-10)
    throw NumericalFailure("generator is not numerically reversible");
  const auto N = static_cast<Eigen::Index>(g.states());
  const auto& p = g.stationary();
  Eigen::VectorXd root(N);
  for (Eigen::Index s = 0; s < N; ++s) root[s] = std::sqrt(p[s]);
  root.normalize();

  SpectralGap out;
  Eigen::VectorXd v;
  if (g.sites() <= opts.dense_max_sites) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.symmetrized_dense());
    out.value = es.eigenvalues()[1];
    v = es.eigenvectors().col(1);
  } else {
    const Eigen::VectorXd deflate[] = {root};
    auto apply = [&g](const Eigen::VectorXd& x, Eigen::VectorXd& y) { g.apply_symmetrized(x, y); };
    const auto res = lanczos_extreme(apply, N, SpectrumEnd::smallest, opts.lanczos, deflate);
    out.value = res.value;
    out.converged = res.converged;
    v = res.vector;
  }
  v -= root.dot(v) * root;
  out.eigenfunction.resize(N);
  for (Eigen::Index s = 0; s < N; ++s) out.eigenfunction[s] = v[s] / std::sqrt(p[s]);
  double second = 0.0;
  for (Eigen::Index s = 0; s < N; ++s) second += p[s] * out.eigenfunction[s] * out.eigenfunction[s];
  out.eigenfunction /= std::sqrt(second);
  return out;
}

/// Ent(F) / (2 D(sqrt F)): any such ratio is a lower bound on the inverse
/// log-Sobolev constant.
inline double lsi_ratio(const GlauberGenerator& g, const Eigen::VectorXd& F) {
  if ((F.array() < 0.0).any()) throw InvalidInput("lsi_ratio needs a nonnegative function");
  const double ent = entropy(g.ensemble(), F);
  const double dir = dirichlet_form(g, F.cwiseSqrt());
  if (dir <= 0.0) {
    if (ent > 1e-12 * g.ensemble().expectation(F)) throw NumericalFailure("zero Dirichlet form with positive entropy");
    throw InvalidInput("lsi_ratio needs a nonconstant function");
  }
  return ent / (2.0 * dir);
}

// ---------------------------------------------------------------------------
// Search for large LSI ratios

struct LsiSearchOptions {
  int restarts = 6;  ///< random positive starts (spectral and level-set starts are always added)
  int iterations = 400;
  double tolerance = 1e-12;  ///< relative improvement below which a run counts as converged
  std::uint64_t seed = 0;
  bool record_trajectories = false;
};

struct LsiCandidate {
  std::string origin;
  double initial_ratio = 0.0;
  double ratio = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trajectory;
};

struct LsiEstimate {
  double best_ratio = 0.0;
  Eigen::VectorXd best_density;  ///< normalized so E_mu F = 1
  double spectral_gap = 0.0;
  double linearized_ratio = 0.0;  ///< best ratio among the 1 + eps g starts
  bool converged = true;
  std::vector<LsiCandidate> candidates;
};

namespace detail {

/// Ratio R(u) = Ent(u^2) / (2 D(u)) and its gradient in u, for E_mu u^2 = 1.
struct RatioObjective {
  const GlauberGenerator& g;

  double value(const Eigen::VectorXd& u, double* ent_out = nullptr, double* dir_out = nullptr) const {
    const double ent = entropy(g.ensemble(), u.cwiseAbs2());
    const double dir = dirichlet_form(g, u);
    if (ent_out) *ent_out = ent;
    if (dir_out) *dir_out = dir;
    if (dir <= 0.0) return 0.0;
    return ent / (2.0 * dir);
  }

  /// Gradient with respect to the mu-weighted inner product.
  Eigen::VectorXd natural_gradient(const Eigen::VectorXd& u, double ent, double dir) const {
    const int n = g.sites();
    const auto& p = g.stationary();
    const auto N = u.size();
    double mean = 0.0;
    for (Eigen::Index s = 0; s < N; ++s) mean += p[s] * u[s] * u[s];
    Eigen::VectorXd grad(N);
    for (Eigen::Index s = 0; s < N; ++s) {
      const double us = u[s];
      const double dent = us == 0.0 ? 0.0 : 2.0 * us * std::log(us * us / mean);
      double ddir = 0.0;
      for (int x = 0; x < n; ++x) {
        const Eigen::Index t = s ^ (Eigen::Index{1} << x);
        ddir += (1.0 + p[t] / p[s]) * (us - u[t]);
      }
      grad[s] = dent / (2.0 * dir) - ent * ddir / (2.0 * dir * dir);
    }
    return grad;
  }
};

/// Below this relative oscillation of u the ratio is lost to cancellation; the limit
/// there is the linearized value 1/gap, which is evaluated separately.
constexpr double min_root_oscillation = 1e-4;

inline bool resolvable(const Eigen::VectorXd& u) {
  return u.maxCoeff() - u.minCoeff() >= min_root_oscillation * u.maxCoeff();
}

inline void normalize_density_root(const std::vector<double>& p, Eigen::VectorXd& u) {
  double m = 0.0;
  for (Eigen::Index s = 0; s < u.size(); ++s) m += p[s] * u[s] * u[s];
  u /= std::sqrt(m);
}

/// Projected gradient ascent of R over u >= 0 with backtracking line search.
inline LsiCandidate ascend(const GlauberGenerator& g, Eigen::VectorXd u, std::string origin,
                           const LsiSearchOptions& opts, Eigen::VectorXd& best_u) {
  const RatioObjective objective{g};
  const auto& p = g.stationary();
  u = u.cwiseAbs();
  normalize_density_root(p, u);

  LsiCandidate cand;
  cand.origin = std::move(origin);
  double ent = 0.0, dir = 0.0;
  double r = objective.value(u, &ent, &dir);
  cand.initial_ratio = r;
  if (opts.record_trajectories) cand.trajectory.push_back(r);
  if (dir <= 0.0) {
    cand.ratio = 0.0;
    cand.converged = true;
    best_u = u;
    return cand;
  }

  double step = 1e-2;
  int stalls = 0;
  int it = 0;
  for (; it < opts.iterations; ++it) {
    const Eigen::VectorXd grad = objective.natural_gradient(u, ent, dir);
    double gnorm = 0.0;
    for (Eigen::Index s = 0; s < u.size(); ++s) gnorm += p[s] * grad[s] * grad[s];
    gnorm = std::sqrt(gnorm);
    if (!(gnorm > 0.0)) {
      cand.converged = true;
      break;
    }
    bool accepted = false;
    double trial_step = std::min(step * 2.0, 10.0);
    Eigen::VectorXd trial;
    double trial_ent = 0.0, trial_dir = 0.0, trial_r = 0.0;
    for (int k = 0; k < 50; ++k, trial_step *= 0.5) {
      trial = (u + (trial_step / gnorm) * grad).cwiseAbs();
      normalize_density_root(p, trial);
      trial_r = objective.value(trial, &trial_ent, &trial_dir);
      if (trial_dir > 0.0 && trial_r > r && resolvable(trial)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      cand.converged = true;
      break;
    }
    const double gain = trial_r - r;
    u = std::move(trial);
    ent = trial_ent;
    dir = trial_dir;
    r = trial_r;
    step = trial_step;
    if (opts.record_trajectories) cand.trajectory.push_back(r);
    if (gain <= opts.tolerance * r) {
      if (++stalls >= 3) {
        cand.converged = true;
        ++it;
        break;
      }
    } else {
      stalls = 0;
    }
  }
  cand.iterations = it;
  cand.ratio = r;
  best_u = u;
  return cand;
}

}  // namespace detail

/// Lower estimate of 1/gamma: maximize Ent(F)/(2 D(sqrt F)) from spectral,
/// random and magnetization level-set starting points.
inline LsiEstimate estimate_inverse_lsi(const GlauberGenerator& g, const LsiSearchOptions& opts = {}) {
  if (opts.restarts < 1) throw InvalidInput("restarts must be >= 1");
  const int n = g.sites();
  const auto N = static_cast<Eigen::Index>(g.states());

  struct Start {
    std::string origin;
    Eigen::VectorXd u;
  };
  std::vector<Start> starts;

  LsiEstimate out;
  const auto gap = spectral_gap(g);
  out.spectral_gap = gap.value;
  const double gmax = gap.eigenfunction.cwiseAbs().maxCoeff();
  for (double eps : {0.5, 1e-1, 1e-2, 1e-3})
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd F = Eigen::VectorXd::Ones(N) + (sign * eps / gmax) * gap.eigenfunction;
      starts.push_back({"spectral eps=" + std::to_string(eps) + (sign > 0 ? "+" : "-"), F.cwiseSqrt()});
    }
  const std::size_t spectral_starts = starts.size();

  for (int r = 0; r < opts.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      0x15A1u, static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    Eigen::VectorXd u(N);
    for (Eigen::Index s = 0; s < N; ++s) u[s] = 0.05 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
    starts.push_back({"random#" + std::to_string(r), u});
  }

  for (int level = -n; level <= n; level += 2) {
    Eigen::VectorXd eq(N), ge(N);
    for (Eigen::Index s = 0; s < N; ++s) {
      const int m = magnetization(static_cast<Config>(s), n);
      eq[s] = m == level ? 1.0 : 0.0;
      ge[s] = m >= level ? 1.0 : 0.0;
    }
    starts.push_back({"level M=" + std::to_string(level), eq});
    if (level > -n) starts.push_back({"level M>=" + std::to_string(level), ge});
  }

  std::vector<LsiCandidate> candidates(starts.size());
  std::vector<Eigen::VectorXd> finals(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(starts.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    candidates[k] = detail::ascend(g, starts[k].u, starts[k].origin, opts, finals[k]);
  }

  std::size_t best = 0;
  out.converged = true;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (candidates[k].ratio > candidates[best].ratio) best = k;
    if (k < spectral_starts) out.linearized_ratio = std::max(out.linearized_ratio, candidates[k].initial_ratio);
  }
  out.converged = candidates[best].converged;
  out.best_ratio = candidates[best].ratio;
  out.best_density = finals[best].cwiseAbs2();
  out.candidates = std::move(candidates);
  return out;
}

// ---------------------------------------------------------------------------
// Entropy decay along the semigroup

struct DecayPoint {
  double time = 0.0;
  double entropy = 0.0;
};

struct DecayOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  int max_rejections = 60;
};

/// Integrates dF/dt = L F with an embedded Dormand-Prince 5(4) pair and returns
/// Ent_mu(F_t) at the requested (nondecreasing) times. F0 is normalized to E_mu F0 = 1.
inline std::vector<DecayPoint> entropy_decay_trace(const GlauberGenerator& g, Eigen::VectorXd F,
                                                   const std::vector<double>& times,
                                                   const DecayOptions& opts = {}) {
  if (F.size() != static_cast<Eigen::Index>(g.states())) throw InvalidInput("density has wrong size");
  if ((F.array() < 0.0).any()) throw InvalidInput("initial density has negative entries");
  const double mean = g.ensemble().expectation(F);
  if (!(mean > 0.0)) throw InvalidInput("initial density has zero mass");
  F /= mean;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] < times[i - 1]) throw InvalidInput("decay times must be nondecreasing");
  if (!times.empty() && times.front() < 0.0) throw InvalidInput("decay times must be >= 0");

  // Dormand-Prince coefficients
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const auto N = F.size();
  Eigen::VectorXd k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), y(N), next(N), err(N);
  g.apply(F, k1);

  // initial step from the largest total exit rate
  double max_rate = 0.0;
  for (std::size_t s = 0; s < g.states(); ++s) max_rate = std::max(max_rate, -g.diagonal(s));
  double h = 0.1 / std::max(1.0, max_rate);

  std::vector<DecayPoint> trace;
  trace.reserve(times.size());
  double t = 0.0;
  const double ent0 = entropy(g.ensemble(), F);
  double last_ent = ent0;
  for (double target : times) {
    int rejections = 0;
    while (t < target) {
      const double step = std::min(h, target - t);
      y = F + step * a21 * k1;
      g.apply(y, k2);
      y = F + step * (a31 * k1 + a32 * k2);
      g.apply(y, k3);
      y = F + step * (a41 * k1 + a42 * k2 + a43 * k3);
      g.apply(y, k4);
      y = F + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      g.apply(y, k5);
      y = F + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      g.apply(y, k6);
      next = F + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      g.apply(next, k7);
      err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double norm = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) {
        const double scale = opts.atol + opts.rtol * std::max(std::abs(F[i]), std::abs(next[i]));
        norm = std::max(norm, std::abs(err[i]) / scale);
      }
      const bool negative = (next.array() < 0.0).any();
      if (norm <= 1.0 && !negative) {
        t = (step == target - t) ? target : t + step;
        F.swap(next);
        k1.swap(k7);
        rejections = 0;
        const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
        h = step * factor;
      } else {
        if (++rejections > opts.max_rejections)
          throw NumericalFailure(negative ? "density turned negative during integration"
                                          : "step size control failed");
        h = step * (negative ? 0.25 : std::clamp(0.9 * std::pow(norm, -0.2), 0.1, 0.9));
      }
    }
    const double ent = entropy(g.ensemble(), F);
    if (ent > last_ent + 1e-12 * std::max(ent0, 1e-300))
      throw NumericalFailure("entropy increased along the semigroup");
    last_ent = ent;
    trace.push_back({target, ent});
  }
  return trace;
}

}  // namespace isinglsi
