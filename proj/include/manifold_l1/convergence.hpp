#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "manifold_l1/cmm.hpp"
#include "manifold_l1/l1_norm.hpp"
#include "manifold_l1/mesh.hpp"
#include "manifold_l1/operators.hpp"
#include "manifold_l1/spectral.hpp"

namespace manifold_l1 {

/// Lowest k eigenfunctions of (W, A), A-orthonormal, as columns. Dense for
/// n <= dense_limit, sequential deflated shift-invert otherwise.
inline Eigen::MatrixXd harmonic_basis(const TriangleMesh& mesh, int k,
                                      CellAreaScheme area_scheme = CellAreaScheme::Barycentric,
                                      Index dense_limit = 2000) {
  const Index n = mesh.n_vertices();
  if (k < 1 || k > n) throw std::invalid_argument("harmonic_basis: k must lie in [1, n]");
  if (n <= dense_limit) {
    const DenseEigenResult d =
        dense_generalized_eig(cotangent_stiffness(mesh), lumped_mass(mesh, area_scheme), dense_limit);
    return d.eigenvectors.leftCols(k);
  }
  CMMOptions opts;
  opts.k = k;
  opts.mu = 0.0;
  opts.area_scheme = area_scheme;
  opts.dense_limit = dense_limit;
  return compressed_modes(mesh, opts).modes;
}

/// Which functions are compared across levels.
///  PerLevel:      eigenfunctions computed on each level, transferred to the finest.
///  FinestSampled: eigenfunctions of the finest level, sampled at coarse vertices.
///  Constant:      f = 1 on every level.
enum class ConvergenceMode { PerLevel, FinestSampled, Constant };

inline const char* to_string(ConvergenceMode m) {
  switch (m) {
    case ConvergenceMode::PerLevel:
      return "per-level";
    case ConvergenceMode::FinestSampled:
      return "finest-sampled";
    case ConvergenceMode::Constant:
      return "constant";
  }
  return "?";
}

struct ConvergenceOptions {
  int levels = 4;
  int num_eigs = 200;
  int first_level = 1;
  ConvergenceMode mode = ConvergenceMode::PerLevel;
  CellAreaScheme area_scheme = CellAreaScheme::Barycentric;
  Index dense_limit = 2000;
  Index max_vertices = 200000;
};

struct LevelReport {
  int level = 0;
  Index n_vertices = 0;
  Index n_faces = 0;
  double mean_edge_length = 0.0;
  int num_functions = 0;
  double err_naive = 0.0;
  double err_zeroth = 0.0;
  double err_first = 0.0;
};

struct ConvergenceReport {
  ConvergenceOptions options;
  std::vector<LevelReport> levels;
};

/// Mean relative error |norm_s(f) - ref| / ref of the three discretizations
/// per subdivision level, with ref the first-order norm on the finest level.
inline ConvergenceReport convergence_study(const TriangleMesh& base, const ConvergenceOptions& opts) {
  if (opts.levels < 1) throw std::invalid_argument("convergence_study: levels must be >= 1");
  if (opts.first_level < 0 || opts.first_level > opts.levels) {
    throw std::invalid_argument("convergence_study: first_level must lie in [0, levels]");
  }
  if (opts.num_eigs < 1) throw std::invalid_argument("convergence_study: num_eigs must be >= 1");
  // Each level multiplies the vertex count by about 4.
  const double predicted = static_cast<double>(base.n_vertices()) * std::pow(4.0, opts.levels);
  if (predicted > static_cast<double>(opts.max_vertices)) {
    throw SizeLimitExceeded("convergence_study: level " + std::to_string(opts.levels) + " would have about " +
                            std::to_string(static_cast<long long>(predicted)) +
                            " vertices; lower --levels or raise the vertex limit");
  }

  std::vector<TriangleMesh> meshes{base};
  std::vector<InterpolationMap> step;  // level l -> l + 1
  for (int l = 0; l < opts.levels; ++l) {
    Subdivision s = midpoint_subdivide(meshes.back(), 1);
    meshes.push_back(std::move(s.mesh));
    step.push_back(std::move(s.map));
  }
  const TriangleMesh& finest = meshes.back();
  const int top = opts.levels;

  auto to_finest = [&](int level, const VertexFunction& f) {
    VertexFunction g = f;
    for (int l = level; l < top; ++l) g = step[static_cast<std::size_t>(l)].apply(g);
    return g;
  };

  Eigen::MatrixXd finest_basis;
  if (opts.mode == ConvergenceMode::FinestSampled) {
    finest_basis = harmonic_basis(finest, static_cast<int>(std::min<Index>(opts.num_eigs, finest.n_vertices())),
                                  opts.area_scheme, opts.dense_limit);
  }

  ConvergenceReport report;
  report.options = opts;
  for (int l = opts.first_level; l <= top; ++l) {
    const TriangleMesh& mesh = meshes[static_cast<std::size_t>(l)];
    const CellAreaVector areas = vertex_cell_areas(mesh, opts.area_scheme);
    std::vector<VertexFunction> coarse, fine;
    switch (opts.mode) {
      case ConvergenceMode::PerLevel: {
        const int k = static_cast<int>(std::min<Index>(opts.num_eigs, mesh.n_vertices()));
        const Eigen::MatrixXd basis = harmonic_basis(mesh, k, opts.area_scheme, opts.dense_limit);
        for (int j = 0; j < k; ++j) {
          coarse.push_back(basis.col(j));
          fine.push_back(to_finest(l, basis.col(j)));
        }
        break;
      }
      case ConvergenceMode::FinestSampled:
        for (Index j = 0; j < finest_basis.cols(); ++j) {
          fine.push_back(finest_basis.col(j));
          coarse.push_back(finest_basis.col(j).head(mesh.n_vertices()));
        }
        break;
      case ConvergenceMode::Constant:
        coarse.push_back(VertexFunction::Ones(mesh.n_vertices()));
        fine.push_back(VertexFunction::Ones(finest.n_vertices()));
        break;
    }

    LevelReport row;
    row.level = l;
    row.n_vertices = mesh.n_vertices();
    row.n_faces = mesh.n_faces();
    row.mean_edge_length = mesh.mean_edge_length();
    row.num_functions = static_cast<int>(coarse.size());
    for (std::size_t j = 0; j < coarse.size(); ++j) {
      const double ref = norm_first(finest, fine[j]);
      row.err_naive += std::abs(norm_naive(coarse[j]) - ref) / ref;
      row.err_zeroth += std::abs(norm_zeroth(coarse[j], areas) - ref) / ref;
      row.err_first += std::abs(norm_first(mesh, coarse[j]) - ref) / ref;
    }
    const double count = static_cast<double>(coarse.size());
    row.err_naive /= count;
    row.err_zeroth /= count;
    row.err_first /= count;
    report.levels.push_back(row);
  }
  return report;
}

/// True if the sequence decreases, allowing one non-monotone step. Values at
/// or below `exact_floor` count as exact and never break the trend.
inline bool decreasing_trend(const std::vector<double>& errors, double exact_floor = 1e-12) {
  int violations = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] <= exact_floor) continue;
    if (errors[i] >= errors[i - 1]) ++violations;
  }
  return violations <= 1;
}

}  // namespace manifold_l1
