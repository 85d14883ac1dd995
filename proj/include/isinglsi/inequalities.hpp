#pragma once

#include "errors.hpp"
#include "exact.hpp"
#include "flow.hpp"
#include "glauber.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace isinglsi {

/// Reproducible field sampler: a deterministic prefix of extremes (zero field, +-50 axis
/// spikes, uniform +-50), then isotropic Gaussians with scales 0.1, 1, 10 interleaved with
/// random axis-aligned spikes. Sample i depends only on (seed, i).
class FieldSampler {
 public:
  FieldSampler(int sites, std::uint64_t seed, std::vector<double> scales = {0.1, 1.0, 10.0})
      : n_(sites), seed_(seed), scales_(std::move(scales)) {}

  std::size_t deterministic_count() const { return 3 + 2 * static_cast<std::size_t>(n_); }

  Eigen::VectorXd operator()(std::size_t i) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n_);
    if (i < deterministic_count()) {
      if (i == 0) return f;
      if (i == 1) return Eigen::VectorXd::Constant(n_, 50.0);
      if (i == 2) return Eigen::VectorXd::Constant(n_, -50.0);
      const std::size_t k = i - 3;
      f[static_cast<Eigen::Index>(k / 2)] = (k % 2 == 0) ? 50.0 : -50.0;
      return f;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    const std::size_t kind = i % (scales_.size() + 1);
    if (kind < scales_.size()) {
      for (int x = 0; x < n_; ++x) f[x] = scales_[kind] * normal(rng);
    } else {
      const auto axis = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n_));
      f[axis] = 10.0 * normal(rng);
    }
    return f;
  }

 private:
  int n_;
  std::uint64_t seed_;
  std::vector<double> scales_;
};

struct Witness {
  Eigen::VectorXd field;
  int x = -1;
  int y = -1;
  std::string link;  ///< which inequality in a chain was tightest
};

/// Outcome of a batch check. Slack is (right side - left side); negative slack below
/// -tolerance is a violation, negative slack above it is counted as rounding noise.
struct ViolationReport {
  std::string check;
  std::string model;
  double t = 0.0;
  std::size_t samples = 0;
  double tolerance = 1e-10;
  double worst_slack = std::numeric_limits<double>::infinity();
  Witness worst_witness;
  std::size_t violations = 0;
  std::size_t noise = 0;

  void record(double slack, const Witness& w) {
    if (slack < worst_slack) {
      worst_slack = slack;
      worst_witness = w;
    }
    if (slack < -tolerance) ++violations;
    else if (slack < 0.0) ++noise;
  }

  void merge(const ViolationReport& o) {
    samples += o.samples;
    violations += o.violations;
    noise += o.noise;
    if (o.worst_slack < worst_slack) {
      worst_slack = o.worst_slack;
      worst_witness = o.worst_witness;
    }
  }

  bool ok() const { return violations == 0; }
};

inline nlohmann::json to_json(const ViolationReport& r) {
  nlohmann::json witness = {{"x", r.worst_witness.x}, {"y", r.worst_witness.y}, {"link", r.worst_witness.link}};
  witness["field"] = std::vector<double>(r.worst_witness.field.data(),
                                         r.worst_witness.field.data() + r.worst_witness.field.size());
  return {{"check", r.check},
          {"model", r.model},
          {"t", r.t},
          {"samples", r.samples},
          {"tolerance", r.tolerance},
          {"worst_slack", r.worst_slack},
          {"worst_witness", witness},
          {"violations", r.violations},
          {"noise", r.noise}};
}

struct CheckOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
  std::string model = "";
};

namespace detail {

/// Runs `check(field, report)` over `count` sampled fields; per-sample reports are merged
/// in sample order so the result does not depend on the thread count.
template <class Check>
ViolationReport sample_batch(const std::string& name, int sites, double t, const CheckOptions& opts, Check&& check) {
  const FieldSampler sampler(sites, opts.seed);
  std::vector<ViolationReport> partial(opts.count);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(opts.count); ++i) {
    auto& rep = partial[static_cast<std::size_t>(i)];
    rep.tolerance = opts.tolerance;
    rep.samples = 1;
    check(sampler(static_cast<std::size_t>(i)), rep);
  }
  ViolationReport out;
  out.check = name;
  out.model = opts.model;
  out.t = t;
  out.tolerance = opts.tolerance;
  for (const auto& p : partial) out.merge(p);
  return out;
}

}  // namespace detail

/// FKG: every truncated correlation Sigma_t(f)_xy is nonnegative.
inline ViolationReport check_fkg(const Eigen::MatrixXd& A, double t, const CheckOptions& opts = {}) {
  const int n = static_cast<int>(A.rows());
  EnumerationLimits{}.check_matrix(n);
  return detail::sample_batch("fkg", n, t, opts, [&](const Eigen::VectorXd& f, ViolationReport& rep) {
    const Eigen::MatrixXd sigma = truncated_correlation(A, t, f);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) rep.record(sigma(x, y), {f, x, y, "Sigma_xy >= 0"});
  });
}

/// Field monotonicity: Sigma_t(f)_xy <= Sigma_t(0)_xy entrywise.
inline ViolationReport check_field_monotonicity(const Eigen::MatrixXd& A, double t, const CheckOptions& opts = {}) {
  const int n = static_cast<int>(A.rows());
  EnumerationLimits{}.check_matrix(n);
  const Eigen::MatrixXd zero = truncated_correlation(A, t, Eigen::VectorXd::Zero(n));
  return detail::sample_batch("monotone", n, t, opts, [&](const Eigen::VectorXd& f, ViolationReport& rep) {
    const Eigen::MatrixXd sigma = truncated_correlation(A, t, f);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) rep.record(zero(x, y) - sigma(x, y), {f, x, y, "Sigma(f)_xy <= Sigma(0)_xy"});
  });
}

/// Perron-Frobenius chain
///   ||Sigma(f)|| = Y^T Sigma(f) Y <= Y^T Sigma(0) Y <= ||Sigma(0)|| <= chi_t
/// with Y >= 0 the absolute value of a top eigenvector of Sigma(f).
inline ViolationReport check_pf_chain(const Eigen::MatrixXd& A, double t, const CheckOptions& opts = {}) {
  const int n = static_cast<int>(A.rows());
  EnumerationLimits{}.check_matrix(n);
  const Eigen::MatrixXd zero = truncated_correlation(A, t, Eigen::VectorXd::Zero(n));
  const double norm_zero = spectral_radius(zero);
  const double chi = susceptibility_detail(A, t).value;
  return detail::sample_batch("pf", n, t, opts, [&](const Eigen::VectorXd& f, ViolationReport& rep) {
    const Eigen::MatrixXd sigma = truncated_correlation(A, t, f);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    const double norm_f = std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[n - 1]));
    const Eigen::VectorXd y = es.eigenvectors().col(n - 1).cwiseAbs();
    const double perron = y.dot(sigma * y);
    const double tested = y.dot(zero * y);
    rep.record(perron - norm_f, {f, -1, -1, "||Sigma(f)|| = Y^T Sigma(f) Y, Y >= 0"});
    rep.record(tested - perron, {f, -1, -1, "Y^T Sigma(f) Y <= Y^T Sigma(0) Y"});
    rep.record(norm_zero - tested, {f, -1, -1, "Y^T Sigma(0) Y <= ||Sigma(0)||"});
    rep.record(norm_zero - norm_f, {f, -1, -1, "||Sigma(f)|| <= ||Sigma(0)||"});
    rep.record(chi - norm_zero, {f, -1, -1, "||Sigma(0)|| <= chi_t"});
  });
}

// ---------------------------------------------------------------------------
// Theorem-level check

struct TheoremCase {
  double beta = 0.0;
  Eigen::VectorXd field;
  double bound_upper = 0.0;
  double best_ratio = 0.0;
  double max_candidate_ratio = 0.0;
  double tightness_gap = 0.0;  ///< bound_upper - best_ratio
  bool optimizer_converged = true;
  std::size_t violations = 0;
};

struct TheoremReport {
  std::string model;
  double tolerance = 1e-8;
  std::vector<TheoremCase> cases;
  std::size_t violations = 0;
  bool ok() const { return violations == 0; }
};

struct TheoremOptions {
  std::size_t fields = 10;
  double field_scale = 1.0;
  std::uint64_t seed = 0;
  double tolerance = 1e-8;
  LsiSearchOptions search{};
  BoundSettings bound{};
  std::string model = "";
  bool include_zero_field = false;
};

/// For each beta, every optimizer candidate ratio (for every sampled field) must stay
/// below the field-independent certified upper enclosure of the bound.
inline TheoremReport check_theorem(const CouplingMatrix& A, const std::vector<double>& betas,
                                   const TheoremOptions& opts = {}) {
  TheoremReport out;
  out.model = opts.model;
  out.tolerance = opts.tolerance;
  const int n = A.sites();
  const SusceptibilityProfile profile(A.A);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const double beta = betas[b];
    const BoundReport bound = lsi_bound([&profile](double t) { return profile(t); }, beta, opts.bound);
    const std::size_t total = opts.fields + (opts.include_zero_field ? 1 : 0);
    for (std::size_t j = 0; j < total; ++j) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
      if (!(opts.include_zero_field && j == 0)) {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(j)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, opts.field_scale);
        for (int x = 0; x < n; ++x) h[x] = normal(rng);
      }
      const GlauberGenerator gen(A.A, beta, h);
      LsiSearchOptions search = opts.search;
      search.seed = opts.seed ^ (0x9E3779B97F4A7C15ULL * (b * 1000 + j + 1));
      const LsiEstimate est = estimate_inverse_lsi(gen, search);

      TheoremCase c;
      c.beta = beta;
      c.field = h;
      c.bound_upper = bound.upper;
      c.best_ratio = est.best_ratio;
      c.optimizer_converged = est.converged;
      for (const auto& cand : est.candidates) {
        c.max_candidate_ratio = std::max({c.max_candidate_ratio, cand.ratio, cand.initial_ratio});
        if (cand.ratio > bound.upper + opts.tolerance) ++c.violations;
        if (cand.initial_ratio > bound.upper + opts.tolerance) ++c.violations;
      }
      c.tightness_gap = bound.upper - est.best_ratio;
      out.violations += c.violations;
      out.cases.push_back(std::move(c));
    }
  }
  return out;
}

inline nlohmann::json to_json(const TheoremReport& r) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"beta", c.beta},
                     {"field", std::vector<double>(c.field.data(), c.field.data() + c.field.size())},
                     {"bound_upper", c.bound_upper},
                     {"best_ratio", c.best_ratio},
                     {"max_candidate_ratio", c.max_candidate_ratio},
                     {"tightness_gap", c.tightness_gap},
                     {"optimizer_converged", c.optimizer_converged},
                     {"violations", c.violations}});
  }
  return {{"check", "theorem"}, {"model", r.model}, {"tolerance", r.tolerance},
          {"violations", r.violations}, {"cases", cases}};
}

}  // namespace isinglsi
