#pragma once

#include "isinglsi/errors.hpp"
#include "isinglsi/exact.hpp"
#include "isinglsi/flow.hpp"
#include "isinglsi/glauber.hpp"
#include "isinglsi/inequalities.hpp"
#include "isinglsi/mcmc.hpp"
#include "isinglsi/model.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace isinglsi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { ok = 0, invalid_input = 1, violation = 2, nonconvergence = 3 };

// ---------------------------------------------------------------------------
// Serialization. Doubles are written with 17 significant digits, so every value
// round-trips exactly and identical runs give identical bytes.

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void dump_json(const json& j, std::string& out, int depth) {
  const std::string pad(2 * (depth + 1), ' '), close_pad(2 * depth, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        dump_json(it.value(), out, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      const bool flat = std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump_json(j[i], out, depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_json(j[i], out, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default: out += j.dump();
  }
}

inline std::string format_json(const json& j) {
  std::string out;
  dump_json(j, out, 0);
  out += "\n";
  return out;
}

inline json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

// ---------------------------------------------------------------------------

struct Options {
  // global
  std::string model_path;
  std::optional<double> beta;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::string out = "out";
  std::optional<int> grid;
  int threads = 0;

  // bound
  bool spectral_radius = false;
  int max_grid = BoundSettings{}.max_grid;
  // lsi
  int restarts = LsiSearchOptions{}.restarts;
  int iterations = LsiSearchOptions{}.iterations;
  // verify
  std::string verify_kind;
  std::optional<double> t;
  std::optional<std::size_t> count;
  std::size_t fields = 10;
  std::vector<double> betas;
  // decay
  std::vector<double> times;
  std::string initial = "random";
  // corollary
  double D = 0.0;
  double beta_c = 0.0;
  std::optional<double> L;
  // mcmc
  long sweeps = ChainConfig{}.sweeps;
  long burn_in = ChainConfig{}.burn_in;
  int chains = ChainConfig{}.chains;
  int batches = ChainConfig{}.batches;
  std::vector<int> sizes;
  std::string family = "grid2d";
  bool periodic = false;
};

class Session {
 public:
  Session(Options opts, std::ostream& out) : o_(std::move(opts)), out_(out) {}

  int bound();
  int exact();
  int gap();
  int lsi();
  int verify();
  int decay();
  int corollary();
  int mcmc();
  int report();

 private:
  const ModelSpec& spec() {
    if (!spec_) {
      if (o_.model_path.empty()) throw InvalidInput("this command needs --model <file>");
      ModelSpec s = load_model(o_.model_path);
      if (o_.beta) s.beta = *o_.beta;
      if (o_.alpha) s.alpha = *o_.alpha;
      s.validate();
      spec_ = std::move(s);
      coupling_ = build_coupling(*spec_);
    }
    return *spec_;
  }
  const CouplingMatrix& coupling() {
    spec();
    return *coupling_;
  }
  double beta() { return spec().beta; }
  double alpha() { return spec().alpha_value(); }

  json header(const std::string& command) {
    json j = {{"command", command}, {"seed", o_.seed}};
    if (spec_) {
      j["model"] = spec_->label();
      j["sites"] = spec_->sites();
      j["beta"] = spec_->beta;
      j["normalization"] = to_json(coupling_->normalization);
    }
    return j;
  }

  void write_json(const std::string& name, const json& j) {
    fs::create_directories(o_.out);
    std::ofstream f(fs::path(o_.out) / (name + ".json"), std::ios::binary);
    f << format_json(j);
    if (!f) throw InvalidInput("cannot write to output directory '" + o_.out + "'");
  }

  void write_csv(const std::string& name, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
    const fs::path dir = fs::path(o_.out) / "traces";
    fs::create_directories(dir);
    std::ofstream f(dir / (name + ".csv"), std::ios::binary);
    for (std::size_t c = 0; c < columns.size(); ++c) f << (c ? "," : "") << columns[c];
    f << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) f << (c ? "," : "") << format_double(row[c]);
      f << "\n";
    }
    if (!f) throw InvalidInput("cannot write trace '" + name + "'");
  }

  BoundSettings bound_settings() const {
    BoundSettings s;
    if (o_.grid) s.initial_grid = *o_.grid;
    if (o_.tol) s.tolerance = *o_.tol;
    s.max_grid = std::max(o_.max_grid, s.initial_grid);
    return s;
  }

  Eigen::VectorXd random_function(std::mt19937_64& rng, std::size_t size, bool positive) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd F(static_cast<Eigen::Index>(size));
    for (auto& v : F) v = positive ? std::exp(normal(rng)) : normal(rng);
    return F;
  }

  int verify_batch(const std::string& kind);
  int verify_identity(const std::string& kind);
  int verify_criterion();
  int verify_theorem();

  Options o_;
  std::ostream& out_;
  std::optional<ModelSpec> spec_;
  std::optional<CouplingMatrix> coupling_;
};

inline json bound_json(const BoundReport& rep) {
  json flags = json::array();
  for (const auto& f : rep.flags) flags.push_back(f);
  return {{"beta", rep.beta},
          {"alpha", rep.alpha},
          {"grid", rep.grid_t},
          {"chi", rep.grid_chi},
          {"chi_beta", rep.chi_beta},
          {"grid_intervals", rep.grid_intervals},
          {"bound_lower", rep.lower},
          {"bound_upper", rep.upper},
          {"coarse_bound", rep.coarse_bound},
          {"criterion_intermediate",
           {{"lower", rep.criterion_lower},
            {"upper", rep.criterion_upper},
            {"dot_c0_norm", rep.dot_c0_norm},
            {"dot_c0_upper", rep.criterion_dot_c0_upper}}},
          {"tolerance_reached", rep.tolerance_reached},
          {"settings",
           {{"initial_grid", rep.settings.initial_grid},
            {"max_grid", rep.settings.max_grid},
            {"tolerance", rep.settings.tolerance}}},
          {"flags", flags}};
}

inline int Session::bound() {
  const auto settings = bound_settings();
  const BoundReport rep = o_.spectral_radius ? lsi_bound_spectral_radius(coupling(), beta(), alpha(), settings)
                                             : lsi_bound(coupling(), beta(), alpha(), settings);
  json j = header("bound");
  j.update(bound_json(rep));
  write_json("bound", j);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.grid_t.size(); ++i) rows.push_back({rep.grid_t[i], rep.grid_chi[i]});
  write_csv("chi_grid", {"t", "chi"}, rows);
  out_ << "bound in [" << format_double(rep.lower) << ", " << format_double(rep.upper) << "]\n";
  return rep.tolerance_reached ? ok : nonconvergence;
}

inline int Session::exact() {
  const auto& A = coupling();
  const Eigen::VectorXd h = spec().field();
  const ExactEnsemble ens(A.A, beta(), h);
  const auto chi = susceptibility_detail(A.A, beta());
  json j = header("exact");
  j["field"] = vec(h);
  j["log_partition"] = ens.log_partition();
  j["mean_spins"] = vec(ens.mean_spins());
  j["chi"] = chi.value;
  j["chi_row"] = chi.row;
  j["chi_row_sums"] = vec(chi.row_sums);
  if (A.sites() <= EnumerationLimits{}.matrix_cap) j["truncated_two_point"] = mat(truncated_correlation(A.A, beta(), h));
  write_json("exact", j);
  out_ << "logZ " << format_double(ens.log_partition()) << "  chi " << format_double(chi.value) << "\n";
  return ok;
}

inline int Session::gap() {
  const GlauberGenerator g(coupling().A, beta(), spec().field());
  const GapOptions opts;
  const auto gap = spectral_gap(g, opts);
  json j = header("gap");
  j["gap"] = gap.value;
  j["method"] = g.sites() <= opts.dense_max_sites ? "dense" : "lanczos";
  j["converged"] = gap.converged;
  j["detailed_balance_defect"] = g.detailed_balance_defect();
  write_json("gap", j);
  out_ << "gap " << format_double(gap.value) << "\n";
  return gap.converged ? ok : nonconvergence;
}

inline int Session::lsi() {
  const GlauberGenerator g(coupling().A, beta(), spec().field());
  LsiSearchOptions opts;
  opts.restarts = o_.restarts;
  opts.iterations = o_.iterations;
  opts.seed = o_.seed;
  if (o_.tol) opts.tolerance = *o_.tol;
  opts.record_trajectories = true;
  const auto est = estimate_inverse_lsi(g, opts);
  json cands = json::array();
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < est.candidates.size(); ++k) {
    const auto& c = est.candidates[k];
    cands.push_back({{"origin", c.origin},
                     {"initial_ratio", c.initial_ratio},
                     {"ratio", c.ratio},
                     {"iterations", c.iterations},
                     {"converged", c.converged}});
    for (std::size_t i = 0; i < c.trajectory.size(); ++i)
      rows.push_back({static_cast<double>(k), static_cast<double>(i), c.trajectory[i]});
  }
  json j = header("lsi");
  j["best_ratio"] = est.best_ratio;
  j["spectral_gap"] = est.spectral_gap;
  j["inverse_gap"] = 1.0 / est.spectral_gap;
  j["linearized_ratio"] = est.linearized_ratio;
  j["converged"] = est.converged;
  j["candidates"] = cands;
  write_json("lsi", j);
  write_csv("lsi_trajectories", {"candidate", "step", "ratio"}, rows);
  out_ << "best ratio " << format_double(est.best_ratio) << "\n";
  return est.converged ? ok : nonconvergence;
}

inline int Session::verify() {
  const std::string& kind = o_.verify_kind;
  if (kind == "fkg" || kind == "monotone" || kind == "pf") return verify_batch(kind);
  if (kind == "decomposition" || kind == "entropy-decomp") return verify_identity(kind);
  if (kind == "criterion") return verify_criterion();
  if (kind == "theorem") return verify_theorem();
  throw InvalidInput("unknown verification '" + kind + "'");
}

inline int Session::verify_batch(const std::string& kind) {
  const double t = o_.t.value_or(beta());
  if (t < 0.0) throw InvalidInput("t must be >= 0");
  CheckOptions opts;
  opts.count = o_.count.value_or(1000);
  opts.seed = o_.seed;
  opts.tolerance = o_.tol.value_or(1e-10);
  opts.model = spec().label();
  const auto& A = coupling().A;
  const ViolationReport rep = kind == "fkg"        ? check_fkg(A, t, opts)
                              : kind == "monotone" ? check_field_monotonicity(A, t, opts)
                                                   : check_pf_chain(A, t, opts);
  json j = header("verify " + kind);
  j.update(to_json(rep));
  write_json("verify_" + kind, j);
  out_ << kind << ": " << rep.violations << " violations in " << rep.samples << " samples\n";
  return rep.ok() ? ok : violation;
}

inline int Session::verify_identity(const std::string& kind) {
  const CovarianceSchedule sched(coupling(), alpha(), beta());
  const Eigen::VectorXd h = spec().field();
  const double tol = o_.tol.value_or(1e-7);
  QuadratureConfig cfg;
  const std::size_t count = o_.count.value_or(5);
  std::mt19937_64 rng(o_.seed);
  json checks = json::array();
  double worst = 0.0;
  auto record = [&](const std::string& identity, double t, const IdentityCheck& c) {
    worst = std::max(worst, c.residual);
    checks.push_back({{"identity", identity},
                      {"t", t},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"residual", c.residual},
                      {"order_gap", c.order_gap}});
  };
  const std::size_t states = std::size_t{1} << sched.sites();
  if (!(beta() > 0.0)) throw InvalidInput(kind + " check needs beta > 0");
  if (kind == "decomposition") {
    const double t = o_.t.value_or(0.5 * beta());
    if (!(t >= 0.0 && t < beta())) throw InvalidInput("decomposition needs t in [0, beta)");
    for (std::size_t i = 0; i < count; ++i)
      record("measure", t, verify_decomposition(sched, t, h, random_function(rng, states, false), cfg));
    record("convolution", -1.0, verify_convolution(sched, static_cast<int>(count), o_.seed, cfg));
  } else {
    for (std::size_t i = 0; i < count; ++i)
      record("entropy", 0.0, verify_entropy_decomposition(sched, h, random_function(rng, states, true), cfg));
  }
  json j = header("verify " + kind);
  j["alpha"] = sched.alpha();
  j["tolerance"] = tol;
  j["quadrature"] = {{"order", cfg.order}, {"order_step", cfg.order_step}, {"tolerance", cfg.tolerance}};
  j["worst_residual"] = worst;
  j["checks"] = checks;
  j["violations"] = std::count_if(checks.begin(), checks.end(),
                                  [tol](const json& c) { return c["residual"].get<double>() > tol; });
  write_json("verify_" + kind, j);
  out_ << kind << ": worst residual " << format_double(worst) << "\n";
  return worst <= tol ? ok : violation;
}

inline int Session::verify_criterion() {
  if (!(beta() > 0.0)) throw InvalidInput("criterion check needs beta > 0");
  const CovarianceSchedule sched(coupling(), alpha(), beta());
  const int n = sched.sites();
  const std::size_t count = o_.count.value_or(1000);
  ViolationReport rep;
  rep.check = "criterion";
  rep.model = spec().label();
  rep.tolerance = o_.tol.value_or(1e-9);
  const SusceptibilityProfile profile(sched.coupling());
  std::mt19937_64 rng(o_.seed);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = beta() * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    if (t <= 0.0) continue;
    Eigen::VectorXd h(n), phi(n);
    for (int x = 0; x < n; ++x) h[x] = normal(rng);
    for (int x = 0; x < n; ++x) phi[x] = normal(rng);
    ++rep.samples;
    rep.record(criterion_slack(sched, t, h, phi, profile(t)), {h, -1, -1, "lambda_min at t=" + format_double(t)});
  }
  json j = header("verify criterion");
  j.update(to_json(rep));
  write_json("verify_criterion", j);
  out_ << "criterion: " << rep.violations << " violations in " << rep.samples << " samples\n";
  return rep.ok() ? ok : violation;
}

inline int Session::verify_theorem() {
  TheoremOptions opts;
  opts.fields = o_.fields;
  opts.seed = o_.seed;
  opts.tolerance = o_.tol.value_or(1e-8);
  opts.model = spec().label();
  opts.include_zero_field = true;
  opts.search.restarts = o_.restarts;
  opts.search.iterations = o_.iterations;
  opts.bound = bound_settings();
  opts.bound.tolerance = BoundSettings{}.tolerance;
  const std::vector<double> betas = o_.betas.empty() ? std::vector<double>{beta()} : o_.betas;
  const auto rep = check_theorem(coupling(), betas, opts);
  json j = header("verify theorem");
  j.update(to_json(rep));
  write_json("verify_theorem", j);
  out_ << "theorem: " << rep.violations << " violations over " << rep.cases.size() << " cases\n";
  return rep.ok() ? ok : violation;
}

inline int Session::decay() {
  const GlauberGenerator g(coupling().A, beta(), spec().field());
  std::vector<double> times = o_.times;
  if (times.empty())
    for (int i = 0; i <= 20; ++i) times.push_back(0.25 * i);
  Eigen::VectorXd F0;
  if (o_.initial == "random") {
    std::mt19937_64 rng(o_.seed);
    F0 = random_function(rng, g.states(), true);
  } else if (o_.initial == "indicator") {
    F0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.states()));
    F0[F0.size() - 1] = 1.0;
  } else {
    throw InvalidInput("initial density must be 'random' or 'indicator'");
  }
  const auto trace = entropy_decay_trace(g, F0, times);
  const auto bound = lsi_bound(coupling(), beta(), alpha(), bound_settings());
  const double gamma = 1.0 / bound.upper;
  const double ent0 = entropy(g.ensemble(), F0 / g.ensemble().expectation(F0));
  std::vector<std::vector<double>> rows;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& p : trace) {
    const double envelope = std::exp(-2.0 * gamma * p.time) * ent0;
    worst = std::min(worst, envelope - p.entropy);
    rows.push_back({p.time, p.entropy, envelope});
  }
  const double tol = o_.tol.value_or(1e-9);
  json j = header("decay");
  j["initial"] = o_.initial;
  j["times"] = times;
  std::vector<double> ents;
  for (const auto& p : trace) ents.push_back(p.entropy);
  j["entropy"] = ents;
  j["gamma_lower"] = gamma;
  j["bound_upper"] = bound.upper;
  j["worst_envelope_slack"] = worst;
  j["tolerance"] = tol;
  write_json("decay", j);
  write_csv("decay", {"t", "entropy", "envelope"}, rows);
  out_ << "decay: worst envelope slack " << format_double(worst) << "\n";
  return worst >= -tol ? ok : violation;
}

inline int Session::corollary() {
  if (!o_.beta) throw InvalidInput("corollary needs --beta");
  const double value = meanfield_corollary(o_.D, o_.beta_c, *o_.beta, o_.L);
  json j = header("corollary");
  j["D"] = o_.D;
  j["beta_c"] = o_.beta_c;
  j["beta"] = *o_.beta;
  j["L"] = o_.L ? json(*o_.L) : json(nullptr);
  j["value"] = value;
  write_json("corollary", j);
  out_ << format_double(value) << "\n";
  return ok;
}

inline int Session::mcmc() {
  ChainConfig cfg;
  cfg.sweeps = o_.sweeps;
  cfg.burn_in = o_.burn_in;
  cfg.chains = o_.chains;
  cfg.batches = o_.batches;
  cfg.seed = o_.seed;
  if (!o_.sizes.empty()) {
    if (o_.betas.empty()) throw InvalidInput("scaling study needs --betas");
    ScalingFamily family;
    family.kind = lattice_kind_from_string(o_.family);
    family.sizes = o_.sizes;
    family.periodic = o_.periodic;
    const auto rows = scaling_study(family, o_.betas, o_.D, o_.beta_c, cfg);
    std::vector<std::vector<double>> table;
    json out_rows = json::array();
    bool converged = true;
    for (const auto& r : rows) {
      table.push_back({r.L, r.beta, r.chi_hat, r.chi_se, r.bound_value, r.corollary_value});
      out_rows.push_back({{"L", r.L},
                          {"sites", r.sites},
                          {"beta", r.beta},
                          {"chi_hat", r.chi_hat},
                          {"chi_se", r.chi_se},
                          {"bound_value", r.bound_value},
                          {"corollary_value", r.corollary_value},
                          {"converged", r.converged}});
      converged = converged && r.converged;
    }
    json j = header("mcmc scaling");
    j["family"] = o_.family;
    j["D"] = o_.D;
    j["beta_c"] = o_.beta_c;
    j["rows"] = out_rows;
    write_json("mcmc", j);
    write_csv("scaling", {"L", "beta", "chi_hat", "chi_se", "bound_value", "corollary_value"}, table);
    out_ << "scaling: " << rows.size() << " rows\n";
    return converged ? ok : nonconvergence;
  }
  cfg.lattice = spec();
  cfg.lattice.h.resize(0);
  cfg.beta = beta();
  const auto est = estimate_susceptibility(cfg);
  json j = header("mcmc");
  j["chi_hat"] = est.value;
  j["standard_error"] = est.standard_error;
  j["orbit"] = est.orbit;
  j["orbit_means"] = est.orbit_means;
  j["orbit_errors"] = est.orbit_errors;
  j["chain_means"] = est.chain_means;
  j["converged"] = est.converged;
  j["sweeps"] = cfg.sweeps;
  j["burn_in"] = cfg.burn_in;
  j["chains"] = cfg.chains;
  write_json("mcmc", j);
  out_ << "chi_hat " << format_double(est.value) << " +- " << format_double(est.standard_error) << "\n";
  return est.converged ? ok : nonconvergence;
}

inline int Session::report() {
  const fs::path dir(o_.out);
  if (!fs::is_directory(dir)) throw InvalidInput("output directory '" + o_.out + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "report.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidInput("no reports found in '" + o_.out + "'");
  json reports = json::object();
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      reports[f.stem().string()] = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidInput("report '" + f.string() + "' is not valid JSON");
    }
  }
  json traces = json::array();
  if (fs::is_directory(dir / "traces")) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir / "traces"))
      if (e.path().extension() == ".csv") names.push_back("traces/" + e.path().filename().string());
    std::sort(names.begin(), names.end());
    traces = names;
  }
  write_json("report", {{"reports", reports}, {"traces", traces}});
  out_ << "bundled " << files.size() << " reports\n";
  return ok;
}

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Log-Sobolev bounds for ferromagnetic Ising models"};
  app.fallthrough();
  app.require_subcommand(1);
  Options o;

  app.add_option("--model", o.model_path, "model JSON file");
  app.add_option("--beta", o.beta, "inverse temperature (overrides the model file)");
  app.add_option("--alpha", o.alpha, "shift parameter, must exceed beta");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--tol", o.tol, "tolerance for the chosen command");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--grid", o.grid, "initial chi grid intervals");
  app.add_option("--threads", o.threads, "OpenMP threads (0 keeps the runtime default)");

  auto* bound = app.add_subcommand("bound", "certified enclosure of the log-Sobolev bound");
  bound->add_flag("--spectral-radius", o.spectral_radius, "use the two-point spectral radius (uncertified)");
  bound->add_option("--max-grid", o.max_grid, "largest chi grid")->capture_default_str();

  app.add_subcommand("exact", "partition function, susceptibility and two-point matrix");
  app.add_subcommand("gap", "spectral gap of the Glauber generator");

  auto* lsi = app.add_subcommand("lsi", "optimizer estimate of the inverse log-Sobolev constant");
  lsi->add_option("--restarts", o.restarts)->capture_default_str();
  lsi->add_option("--iterations", o.iterations)->capture_default_str();

  auto* verify = app.add_subcommand("verify", "verification batteries");
  verify->add_option("kind", o.verify_kind, "which check")
      ->required()
      ->check(CLI::IsMember({"fkg", "monotone", "pf", "decomposition", "entropy-decomp", "criterion", "theorem"}));
  verify->add_option("--t", o.t, "flow time / inverse temperature of the check");
  verify->add_option("--count", o.count, "number of samples");
  verify->add_option("--fields", o.fields, "random fields per beta (theorem)")->capture_default_str();
  verify->add_option("--betas", o.betas, "comma-separated beta list (theorem)")->delimiter(',');
  verify->add_option("--restarts", o.restarts)->capture_default_str();
  verify->add_option("--iterations", o.iterations)->capture_default_str();
  verify->add_option("--max-grid", o.max_grid)->capture_default_str();

  auto* decay = app.add_subcommand("decay", "entropy along the Glauber semigroup");
  decay->add_option("--times", o.times, "comma-separated times")->delimiter(',');
  decay->add_option("--initial", o.initial, "random or indicator")->capture_default_str();
  decay->add_option("--max-grid", o.max_grid)->capture_default_str();

  auto* corollary = app.add_subcommand("corollary", "mean-field closed forms");
  corollary->add_option("--D", o.D, "mean-field exponent")->required();
  corollary->add_option("--beta-c", o.beta_c, "critical inverse temperature")->required();
  corollary->add_option("--L", o.L, "linear size for the finite-volume form");

  auto* mcmc = app.add_subcommand("mcmc", "heat-bath susceptibility estimate or scaling study");
  mcmc->add_option("--sweeps", o.sweeps)->capture_default_str();
  mcmc->add_option("--burn-in", o.burn_in)->capture_default_str();
  mcmc->add_option("--chains", o.chains)->capture_default_str();
  mcmc->add_option("--batches", o.batches)->capture_default_str();
  mcmc->add_option("--sizes", o.sizes, "comma-separated sizes for a scaling study")->delimiter(',');
  mcmc->add_option("--betas", o.betas, "comma-separated beta list for a scaling study")->delimiter(',');
  mcmc->add_option("--family", o.family, "grid2d or complete")->capture_default_str();
  mcmc->add_flag("--periodic", o.periodic);
  mcmc->add_option("--D", o.D, "mean-field exponent for the corollary column");
  mcmc->add_option("--beta-c", o.beta_c, "critical inverse temperature for the corollary column");

  app.add_subcommand("report", "bundle the reports in --out into report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : invalid_input;
  }

  if (o.threads < 0) {
    err << "error: --threads must be >= 0\n";
    return invalid_input;
  }
  if (o.threads > 0) omp_set_num_threads(o.threads);

  const std::string name = app.get_subcommands().front()->get_name();
  Session session(o, out);
  try {
    if (name == "bound") return session.bound();
    if (name == "exact") return session.exact();
    if (name == "gap") return session.gap();
    if (name == "lsi") return session.lsi();
    if (name == "verify") return session.verify();
    if (name == "decay") return session.decay();
    if (name == "corollary") return session.corollary();
    if (name == "mcmc") return session.mcmc();
    return session.report();
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return invalid_input;
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << "\n";
    return violation;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return nonconvergence;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return invalid_input;
  }
}

}  // namespace isinglsi::cli
