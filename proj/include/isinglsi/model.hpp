#pragma once

#include "errors.hpp"
#include "lanczos.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isinglsi {

enum class LatticeKind { path, cycle, grid2d, complete, custom };

inline std::string to_string(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::path: return "path";
    case LatticeKind::cycle: return "cycle";
    case LatticeKind::grid2d: return "grid2d";
    case LatticeKind::complete: return "complete";
    case LatticeKind::custom: return "custom";
  }
  return "custom";
}

inline LatticeKind lattice_kind_from_string(const std::string& name) {
  if (name == "path") return LatticeKind::path;
  if (name == "cycle") return LatticeKind::cycle;
  if (name == "grid2d" || name == "grid") return LatticeKind::grid2d;
  if (name == "complete") return LatticeKind::complete;
  if (name == "custom") return LatticeKind::custom;
  throw InvalidInput("unknown model kind '" + name + "'");
}

/// Everything needed to instantiate an Ising model before normalization.
struct ModelSpec {
  LatticeKind kind = LatticeKind::path;
  int n = 0;  ///< path, cycle, complete
  int width = 0;
  int height = 0;
  bool periodic = false;  ///< grid2d only
  Eigen::MatrixXd matrix;  ///< custom only: raw coupling
  double J = 1.0;
  double beta = 0.0;
  Eigen::VectorXd h;  ///< empty means zero field
  std::optional<double> alpha;

  int sites() const {
    switch (kind) {
      case LatticeKind::grid2d: return width * height;
      case LatticeKind::custom: return static_cast<int>(matrix.rows());
      default: return n;
    }
  }

  double alpha_value() const { return alpha.value_or(beta + 1.0); }

  Eigen::VectorXd field() const {
    if (h.size() == 0) return Eigen::VectorXd::Zero(sites());
    return h;
  }

  std::string label() const {
    switch (kind) {
      case LatticeKind::grid2d:
        return "grid2d-" + std::to_string(width) + "x" + std::to_string(height) +
               (periodic ? "-periodic" : "");
      case LatticeKind::custom: return "custom-" + std::to_string(sites());
      default: return to_string(kind) + "-" + std::to_string(n);
    }
  }

  void validate() const {
    const int size = sites();
    if (size <= 0) throw InvalidInput("empty graph: model has no sites");
    if (!(J >= 0.0) || !std::isfinite(J)) throw InvalidInput("coupling strength J must be >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("beta must be >= 0");
    if (alpha && !(*alpha > beta)) throw InvalidInput("alpha must exceed beta");
    if (h.size() != 0 && h.size() != size)
      throw InvalidInput("field has length " + std::to_string(h.size()) + ", expected " +
                         std::to_string(size));
    if (!h.allFinite()) throw InvalidInput("field has non-finite entries");
    if (kind == LatticeKind::cycle && n < 3) throw InvalidInput("cycle needs n >= 3");
    if (kind == LatticeKind::grid2d) {
      if (width <= 0 || height <= 0) throw InvalidInput("grid2d needs positive width and height");
      if (periodic && (width < 3 || height < 3))
        throw InvalidInput("periodic grid2d needs width, height >= 3");
    }
    if (kind == LatticeKind::custom) {
      if (matrix.rows() != matrix.cols()) throw InvalidInput("custom matrix is not square");
      if (!matrix.allFinite()) throw InvalidInput("custom matrix has non-finite entries");
      const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
      for (Eigen::Index x = 0; x < matrix.rows(); ++x)
        for (Eigen::Index y = 0; y < matrix.cols(); ++y) {
          if (std::abs(matrix(x, y) - matrix(y, x)) > 1e-12 * scale)
            throw InvalidInput("custom matrix is not symmetric");
          if (x != y && matrix(x, y) > 0.0)
            throw InvalidInput("custom matrix has a positive off-diagonal entry at (" +
                               std::to_string(x) + "," + std::to_string(y) + ")");
        }
    }
  }
};

/// How the raw matrix was turned into the working coupling: A = scale * (raw + shift * I).
struct NormalizationRecord {
  double shift = 0.0;
  double scale = 1.0;
  double raw_min_eigenvalue = 0.0;
  double raw_max_eigenvalue = 0.0;
  double min_eigenvalue = 0.0;  ///< of the normalized matrix
};

/// Normalized ferromagnetic coupling: symmetric, A_xy <= 0 off the diagonal,
/// positive definite and with spectral radius one.
struct CouplingMatrix {
  Eigen::MatrixXd A;
  NormalizationRecord normalization;

  int sites() const { return static_cast<int>(A.rows()); }
};

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Smallest and largest eigenvalue of a symmetric matrix. Dense solver up to 64 sites,
/// Lanczos above.
inline EigenRange extreme_eigenvalues(const Eigen::MatrixXd& M) {
  if (!M.allFinite()) throw InvalidInput("matrix has non-finite entries");
  if (M.rows() == 0) throw InvalidInput("empty matrix");
  if (M.rows() <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()[0], es.eigenvalues()[M.rows() - 1]};
  }
  auto apply = [&M](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = M * x; };
  LanczosOptions opts;
  opts.tolerance = 1e-12;
  opts.max_iterations = static_cast<int>(std::min<Eigen::Index>(M.rows(), 600));
  const auto lo = lanczos_extreme(apply, M.rows(), SpectrumEnd::smallest, opts);
  const auto hi = lanczos_extreme(apply, M.rows(), SpectrumEnd::largest, opts);
  if (!lo.converged || !hi.converged)
    throw NumericalFailure("extreme eigenvalue iteration did not converge");
  return {lo.value, hi.value};
}

inline double spectral_radius(const Eigen::MatrixXd& M) {
  const auto range = extreme_eigenvalues(M);
  return std::max(std::abs(range.min), std::abs(range.max));
}

inline std::vector<std::pair<int, int>> lattice_edges(const ModelSpec& spec) {
  std::vector<std::pair<int, int>> edges;
  switch (spec.kind) {
    case LatticeKind::path:
      for (int x = 0; x + 1 < spec.n; ++x) edges.emplace_back(x, x + 1);
      break;
    case LatticeKind::cycle:
      for (int x = 0; x < spec.n; ++x) edges.emplace_back(x, (x + 1) % spec.n);
      break;
    case LatticeKind::complete:
      for (int x = 0; x < spec.n; ++x)
        for (int y = x + 1; y < spec.n; ++y) edges.emplace_back(x, y);
      break;
    case LatticeKind::grid2d: {
      const int W = spec.width, H = spec.height;
      auto id = [W](int i, int j) { return j * W + i; };
      for (int j = 0; j < H; ++j)
        for (int i = 0; i < W; ++i) {
          if (i + 1 < W) edges.emplace_back(id(i, j), id(i + 1, j));
          else if (spec.periodic) edges.emplace_back(id(i, j), id(0, j));
          if (j + 1 < H) edges.emplace_back(id(i, j), id(i, j + 1));
          else if (spec.periodic) edges.emplace_back(id(i, j), id(i, 0));
        }
      break;
    }
    case LatticeKind::custom:
      for (int x = 0; x < spec.sites(); ++x)
        for (int y = x + 1; y < spec.sites(); ++y)
          if (spec.matrix(x, y) != 0.0) edges.emplace_back(x, y);
      break;
  }
  return edges;
}

/// Raw (pre-normalization) coupling: -J on every edge of a named lattice.
inline Eigen::MatrixXd raw_coupling(const ModelSpec& spec) {
  if (spec.kind == LatticeKind::custom) return spec.matrix;
  const int size = spec.sites();
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(size, size);
  for (auto [x, y] : lattice_edges(spec)) {
    raw(x, y) -= spec.J;
    raw(y, x) -= spec.J;
  }
  return raw;
}

/// Shift the diagonal until positive definite (margin 0.5 above zero), then scale
/// the top eigenvalue to one. Already positive definite input is only scaled, which
/// makes the operation idempotent.
inline CouplingMatrix normalize_coupling(const Eigen::MatrixXd& raw) {
  const auto range = extreme_eigenvalues(raw);
  CouplingMatrix out;
  auto& rec = out.normalization;
  rec.raw_min_eigenvalue = range.min;
  rec.raw_max_eigenvalue = range.max;
  rec.shift = range.min > 0.0 ? 0.0 : std::abs(range.min) + 0.5;
  rec.scale = 1.0 / (range.max + rec.shift);
  out.A = rec.scale * (raw + rec.shift * Eigen::MatrixXd::Identity(raw.rows(), raw.cols()));
  out.A = 0.5 * (out.A + out.A.transpose()).eval();
  rec.min_eigenvalue = rec.scale * (range.min + rec.shift);
  return out;
}

inline CouplingMatrix build_coupling(const ModelSpec& spec) {
  spec.validate();
  return normalize_coupling(raw_coupling(spec));
}

/// Partition of the sites into orbits of lattice automorphisms that preserve the
/// coupling. Used to average single-site estimators; custom graphs get singletons.
inline std::vector<int> site_orbits(const ModelSpec& spec) {
  const int size = spec.sites();
  std::vector<std::vector<int>> generators;
  auto perm = [size](auto&& fn) {
    std::vector<int> p(size);
    for (int x = 0; x < size; ++x) p[x] = fn(x);
    return p;
  };
  switch (spec.kind) {
    case LatticeKind::path:
      generators.push_back(perm([&](int x) { return size - 1 - x; }));
      break;
    case LatticeKind::cycle:
    case LatticeKind::complete:
      generators.push_back(perm([&](int x) { return (x + 1) % size; }));
      break;
    case LatticeKind::grid2d: {
      const int W = spec.width, H = spec.height;
      generators.push_back(perm([&](int x) { return (x / W) * W + (W - 1 - x % W); }));
      generators.push_back(perm([&](int x) { return (H - 1 - x / W) * W + x % W; }));
      if (W == H) generators.push_back(perm([&](int x) { return (x % W) * W + x / W; }));
      if (spec.periodic) {
        generators.push_back(perm([&](int x) { return (x / W) * W + (x % W + 1) % W; }));
        generators.push_back(perm([&](int x) { return ((x / W + 1) % H) * W + x % W; }));
      }
      break;
    }
    case LatticeKind::custom: break;
  }

  std::vector<int> parent(size);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& g : generators)
    for (int x = 0; x < size; ++x) {
      const int a = find(x), b = find(g[x]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<int> label(size, -1), orbit(size);
  int next = 0;
  for (int x = 0; x < size; ++x) {
    const int root = find(x);
    if (label[root] < 0) label[root] = next++;
    orbit[x] = label[root];
  }
  return orbit;
}

// ---------------------------------------------------------------------------
// JSON model files

inline ModelSpec model_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  try {
    spec.kind = lattice_kind_from_string(j.at("kind").get<std::string>());
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    switch (spec.kind) {
      case LatticeKind::grid2d:
        spec.width = params.at("width").get<int>();
        spec.height = params.at("height").get<int>();
        spec.periodic = params.value("periodic", false);
        break;
      case LatticeKind::custom: {
        const auto& rows = params.at("matrix");
        const auto size = static_cast<Eigen::Index>(rows.size());
        spec.matrix.resize(size, size);
        for (Eigen::Index x = 0; x < size; ++x) {
          if (rows[x].size() != rows.size()) throw InvalidInput("custom matrix is not square");
          for (Eigen::Index y = 0; y < size; ++y) spec.matrix(x, y) = rows[x][y].get<double>();
        }
        break;
      }
      default:
        spec.n = params.contains("n") ? params.at("n").get<int>() : params.at("length").get<int>();
    }
    spec.J = j.value("J", 1.0);
    spec.beta = j.value("beta", 0.0);
    if (j.contains("alpha") && !j.at("alpha").is_null()) spec.alpha = j.at("alpha").get<double>();
    const int size = spec.sites();
    if (j.contains("h")) {
      const auto& h = j.at("h");
      if (h.is_number()) {
        spec.h = Eigen::VectorXd::Constant(std::max(size, 0), h.get<double>());
      } else {
        spec.h.resize(static_cast<Eigen::Index>(h.size()));
        for (std::size_t i = 0; i < h.size(); ++i) spec.h[static_cast<Eigen::Index>(i)] = h[i].get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed model spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

inline nlohmann::json to_json(const NormalizationRecord& rec) {
  return {{"shift", rec.shift},
          {"scale", rec.scale},
          {"raw_min_eigenvalue", rec.raw_min_eigenvalue},
          {"raw_max_eigenvalue", rec.raw_max_eigenvalue},
          {"min_eigenvalue", rec.min_eigenvalue}};
}

inline NormalizationRecord normalization_from_json(const nlohmann::json& j) {
  NormalizationRecord rec;
  rec.shift = j.at("shift").get<double>();
  rec.scale = j.at("scale").get<double>();
  rec.raw_min_eigenvalue = j.at("raw_min_eigenvalue").get<double>();
  rec.raw_max_eigenvalue = j.at("raw_max_eigenvalue").get<double>();
  rec.min_eigenvalue = j.at("min_eigenvalue").get<double>();
  return rec;
}

}  // namespace isinglsi
