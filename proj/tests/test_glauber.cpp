#include "isinglsi/glauber.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace isinglsi;

namespace {

CouplingMatrix coupling(LatticeKind kind, int n) {
  ModelSpec spec;
  spec.kind = kind;
  spec.n = n;
  return build_coupling(spec);
}

Eigen::VectorXd random_positive(std::mt19937_64& rng, std::size_t N) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Eigen::VectorXd F(static_cast<Eigen::Index>(N));
  for (auto& v : F) v = u(rng);
  return F;
}

/// Dense eigendecomposition of the symmetrized generator, for semigroup oracles.
struct DenseSemigroup {
  Eigen::VectorXd root;  // sqrt(mu)
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;

  explicit DenseSemigroup(const GlauberGenerator& g) {
    const auto L = oracle::generator(g.stationary(), g.sites());
    const auto N = L.rows();
    root.resize(N);
    for (Eigen::Index s = 0; s < N; ++s) root[s] = std::sqrt(g.stationary()[s]);
    const Eigen::MatrixXd S = -(root.asDiagonal() * L * root.cwiseInverse().asDiagonal());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    values = es.eigenvalues();
    vectors = es.eigenvectors();
  }

  Eigen::VectorXd evolve(const Eigen::VectorXd& F, double t) const {
    const Eigen::VectorXd coeff = vectors.transpose() * root.cwiseProduct(F);
    const Eigen::VectorXd decayed = (-t * values.array()).exp() * coeff.array();
    return (vectors * decayed).cwiseQuotient(root);
  }
};

/// Largest ratio over densities (a, 1) on a single site, by a log-spaced scan
/// followed by golden-section refinement.
double single_site_lsi_oracle(const GlauberGenerator& g) {
  auto ratio = [&](double log_a) {
    Eigen::VectorXd F(2);
    F << std::exp(log_a), 1.0;
    return lsi_ratio(g, F);
  };
  double best = -30.0, best_r = 0.0;
  for (int i = 0; i <= 6000; ++i) {
    const double la = -30.0 + 0.01 * i;
    if (std::abs(la) < 1e-9) continue;
    const double r = ratio(la);
    if (r > best_r) best_r = r, best = la;
  }
  double lo = best - 0.01, hi = best + 0.01;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
    if (std::abs(m1) < 1e-7 || std::abs(m2) < 1e-7) break;
    if (ratio(m1) < ratio(m2)) lo = m1;
    else hi = m2;
  }
  const double mid = 0.5 * (lo + hi);
  return std::abs(mid) < 1e-7 ? best_r : std::max(best_r, ratio(mid));
}

}  // namespace

TEST(Generator, SingleSiteRates) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(1, 1);
  const double f = 0.7;
  const GlauberGenerator g(A, 0.3, Eigen::VectorXd::Constant(1, f));
  const double p = std::exp(f) / (2.0 * std::cosh(f)), q = 1.0 - p;
  // bit set means spin +1
  EXPECT_NEAR(g.rate(1, 0), 0.5 * (1.0 + q / p), 1e-14);
  EXPECT_NEAR(g.rate(0, 0), 0.5 * (1.0 + p / q), 1e-14);
  EXPECT_NEAR(g.diagonal(1), -g.rate(1, 0), 0.0);
}

TEST(Generator, MatchesDenseOracleAndIsReversible) {
  std::mt19937_64 rng(41);
  for (const auto& c : {coupling(LatticeKind::path, 3), coupling(LatticeKind::cycle, 4),
                        coupling(LatticeKind::complete, 5)}) {
    Eigen::VectorXd h(c.sites());
    for (auto& v : h) v = std::normal_distribution<double>(0.0, 0.5)(rng);
    const GlauberGenerator g(c.A, 1.2, h);
    const auto L = oracle::generator(g.stationary(), g.sites());
    const Eigen::VectorXd F = random_positive(rng, g.states());
    EXPECT_LE((g.apply(F) - L * F).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(g.detailed_balance_defect(), 1e-13);
    // mu is invariant: sum_s mu(s) (L F)(s) = 0
    EXPECT_NEAR(g.ensemble().expectation(g.apply(F)), 0.0, 1e-13);
  }
}

TEST(Generator, DirichletFormEqualsGeneratorQuadraticForm) {
  std::mt19937_64 rng(43);
  const auto c = coupling(LatticeKind::cycle, 6);
  const GlauberGenerator g(c.A, 0.9, Eigen::VectorXd::Constant(6, 0.2));
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd F = random_positive(rng, g.states());
    const double d = dirichlet_form(g, F);
    EXPECT_NEAR(d, generator_quadratic_form(g, F), 1e-12 * d);
  }
  EXPECT_NEAR(dirichlet_form(g, Eigen::VectorXd::Constant(64, 3.0)), 0.0, 0.0);
}

TEST(Generator, EnforcesMatrixCap) {
  EXPECT_THROW(GlauberGenerator(Eigen::MatrixXd::Identity(15, 15), 0.1, Eigen::VectorXd::Zero(15)), InvalidInput);
}

TEST(Entropy, ElementaryValues) {
  const auto c = coupling(LatticeKind::path, 4);
  const ExactEnsemble uniform(c.A, 0.0, Eigen::VectorXd::Zero(4));
  Eigen::VectorXd F = Eigen::VectorXd::Zero(16);
  F[5] = 16.0;
  EXPECT_NEAR(entropy(uniform, F), 4.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(entropy(uniform, Eigen::VectorXd::Constant(16, 2.5)), 0.0, 1e-16);
  // homogeneous of degree one
  std::mt19937_64 rng(3);
  const Eigen::VectorXd G = random_positive(rng, 16);
  EXPECT_NEAR(entropy(uniform, 3.0 * G), 3.0 * entropy(uniform, G), 1e-14);
  EXPECT_THROW(entropy(uniform, -G), InvalidInput);
}

TEST(Entropy, SeriesBranchAgreesWithClosedForm) {
  for (double x : {0.9, 0.95, 1.05, 1.0999}) {
    const double direct = x * std::log(x) - x + 1.0;
    EXPECT_NEAR(detail::relative_entropy_density(x), direct, 1e-15);
  }
  // second-order behaviour r^2/2 where the closed form loses digits
  EXPECT_NEAR(detail::relative_entropy_density(1.0 + 1e-6) / 5e-13, 1.0, 1e-6);
}

TEST(SpectralGap, SingleSiteClosedForm) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(1, 1);
  for (double f : {0.0, 0.5, -2.0}) {
    const GlauberGenerator g(A, 0.4, Eigen::VectorXd::Constant(1, f));
    const double p = g.stationary()[1], q = g.stationary()[0];
    EXPECT_NEAR(spectral_gap(g).value, 1.0 + 0.5 * (p / q + q / p), 1e-12);
  }
}

TEST(SpectralGap, IndependentSitesTensorize) {
  // A = I: the field-free measure is uniform and the gap is the single-site value 2
  const GlauberGenerator g(Eigen::MatrixXd::Identity(5, 5), 0.7, Eigen::VectorXd::Zero(5));
  const auto gap = spectral_gap(g);
  EXPECT_NEAR(gap.value, 2.0, 1e-12);
  EXPECT_NEAR(g.ensemble().expectation(gap.eigenfunction), 0.0, 1e-12);
  EXPECT_NEAR(g.ensemble().expectation(Eigen::VectorXd(gap.eigenfunction.cwiseAbs2())), 1.0, 1e-12);
}

TEST(SpectralGap, EigenfunctionSatisfiesEigenEquation) {
  const auto c = coupling(LatticeKind::cycle, 6);
  const GlauberGenerator g(c.A, 1.5, Eigen::VectorXd::Zero(6));
  const auto gap = spectral_gap(g);
  const Eigen::VectorXd residual = g.apply(gap.eigenfunction) + gap.value * gap.eigenfunction;
  EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-9);
  // Rayleigh quotient equals the gap
  EXPECT_NEAR(dirichlet_form(g, gap.eigenfunction), gap.value, 1e-10);
}

TEST(SpectralGap, LanczosAgreesWithDenseSolver) {
  const auto c = coupling(LatticeKind::path, 10);
  const GlauberGenerator g(c.A, 1.1, Eigen::VectorXd::Constant(10, 0.1));
  const auto dense = spectral_gap(g);
  GapOptions iterative;
  iterative.dense_max_sites = 0;
  const auto lanczos = spectral_gap(g, iterative);
  EXPECT_TRUE(lanczos.converged);
  EXPECT_NEAR(lanczos.value, dense.value, 1e-9 * dense.value);
  const double overlap = g.ensemble().expectation(Eigen::VectorXd(dense.eigenfunction.cwiseProduct(lanczos.eigenfunction)));
  EXPECT_NEAR(std::abs(overlap), 1.0, 1e-6);
}

TEST(SpectralGap, DenseOracleOnSmallModel) {
  const auto c = coupling(LatticeKind::complete, 4);
  const GlauberGenerator g(c.A, 2.0, Eigen::VectorXd::Zero(4));
  DenseSemigroup oracle_semigroup(g);
  EXPECT_NEAR(oracle_semigroup.values[0], 0.0, 1e-12);
  EXPECT_NEAR(spectral_gap(g).value, oracle_semigroup.values[1], 1e-11);
}

TEST(LsiRatio, ScaleInvariantAndRejectsConstants) {
  std::mt19937_64 rng(47);
  const auto c = coupling(LatticeKind::path, 4);
  const GlauberGenerator g(c.A, 0.8, Eigen::VectorXd::Zero(4));
  const Eigen::VectorXd F = random_positive(rng, 16);
  EXPECT_NEAR(lsi_ratio(g, 7.0 * F), lsi_ratio(g, F), 1e-13);
  EXPECT_THROW(lsi_ratio(g, Eigen::VectorXd::Ones(16)), InvalidInput);
}

TEST(LsiRatio, LinearizationApproachesInverseGap) {
  const auto c = coupling(LatticeKind::cycle, 5);
  const GlauberGenerator g(c.A, 1.0, Eigen::VectorXd::Zero(5));
  const auto gap = spectral_gap(g);
  const double gmax = gap.eigenfunction.cwiseAbs().maxCoeff();
  double previous_error = 1.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const Eigen::VectorXd F = Eigen::VectorXd::Ones(32) + (eps / gmax) * gap.eigenfunction;
    const double error = std::abs(lsi_ratio(g, F) - 1.0 / gap.value);
    EXPECT_LT(error, previous_error);
    previous_error = error;
  }
  EXPECT_LT(previous_error, 1e-3);
}

TEST(LsiSearch, UniformSingleSiteReachesOneHalf) {
  const GlauberGenerator g(Eigen::MatrixXd::Identity(1, 1), 0.5, Eigen::VectorXd::Zero(1));
  const auto est = estimate_inverse_lsi(g);
  EXPECT_LE(est.best_ratio, 0.5 + 1e-12);
  EXPECT_GT(est.best_ratio, 0.5 - 1e-4);
  EXPECT_NEAR(est.linearized_ratio, 0.5, 1e-3);
}

TEST(LsiSearch, BiasedSingleSiteMatchesScanOracle) {
  for (double f : {0.4, 1.5}) {
    const GlauberGenerator g(Eigen::MatrixXd::Identity(1, 1), 0.5, Eigen::VectorXd::Constant(1, f));
    const double oracle_value = single_site_lsi_oracle(g);
    const auto est = estimate_inverse_lsi(g);
    EXPECT_LE(est.best_ratio, oracle_value * (1.0 + 1e-9));
    EXPECT_GT(est.best_ratio, oracle_value * (1.0 - 1e-5));
    EXPECT_LT(est.best_ratio, 0.5);
  }
}

TEST(LsiSearch, ProductMeasureStaysBelowTensorizedConstant) {
  const GlauberGenerator g(Eigen::MatrixXd::Identity(3, 3), 0.5, Eigen::VectorXd::Zero(3));
  LsiSearchOptions opts;
  opts.record_trajectories = true;
  const auto est = estimate_inverse_lsi(g, opts);
  EXPECT_LE(est.best_ratio, 0.5 + 1e-12);
  EXPECT_GT(est.best_ratio, 0.5 - 1e-3);
  EXPECT_NEAR(est.best_density.dot(Eigen::Map<const Eigen::VectorXd>(g.stationary().data(), 8)), 1.0, 1e-12);
  for (const auto& cand : est.candidates) {
    EXPECT_GE(cand.ratio, cand.initial_ratio);
    for (std::size_t i = 1; i < cand.trajectory.size(); ++i) EXPECT_GE(cand.trajectory[i], cand.trajectory[i - 1]);
  }
}

TEST(LsiSearch, ReportsAtLeastTheLinearizedValue) {
  const auto c = coupling(LatticeKind::path, 4);
  const GlauberGenerator g(c.A, 1.5, Eigen::VectorXd::Zero(4));
  const auto est = estimate_inverse_lsi(g);
  EXPECT_GE(est.best_ratio, est.linearized_ratio);
  EXPECT_NEAR(est.linearized_ratio, 1.0 / est.spectral_gap, 1e-2 / est.spectral_gap);
}

TEST(EntropyDecay, MatchesSpectralSolution) {
  std::mt19937_64 rng(53);
  const auto c = coupling(LatticeKind::cycle, 5);
  const GlauberGenerator g(c.A, 1.3, Eigen::VectorXd::Constant(5, 0.1));
  const DenseSemigroup exact(g);
  Eigen::VectorXd F0 = random_positive(rng, g.states());
  F0 /= g.ensemble().expectation(F0);
  const std::vector<double> times{0.0, 0.05, 0.2, 0.5, 1.0, 2.0};
  const auto trace = entropy_decay_trace(g, F0, times);
  ASSERT_EQ(trace.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = entropy(g.ensemble(), exact.evolve(F0, times[i]));
    EXPECT_NEAR(trace[i].entropy, expected, 1e-8 * expected + 1e-14) << "t=" << times[i];
    if (i) EXPECT_LE(trace[i].entropy, trace[i - 1].entropy);
  }
}

TEST(EntropyDecay, IndicatorStartAndBadInput) {
  const auto c = coupling(LatticeKind::path, 3);
  const GlauberGenerator g(c.A, 0.6, Eigen::VectorXd::Zero(3));
  const DenseSemigroup exact(g);
  Eigen::VectorXd F0 = Eigen::VectorXd::Zero(8);
  F0[7] = 1.0;
  const auto trace = entropy_decay_trace(g, F0, {0.0, 0.1, 1.0});
  const Eigen::VectorXd normalized = F0 / g.ensemble().expectation(F0);
  EXPECT_NEAR(trace[0].entropy, -std::log(g.stationary()[7]), 1e-12);
  EXPECT_NEAR(trace[2].entropy, entropy(g.ensemble(), exact.evolve(normalized, 1.0)), 1e-8);
  EXPECT_THROW(entropy_decay_trace(g, -F0, {1.0}), InvalidInput);
  EXPECT_THROW(entropy_decay_trace(g, Eigen::VectorXd::Ones(8), {1.0, 0.5}), InvalidInput);
}
