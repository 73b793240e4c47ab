#pragma once

// Deterministic random inputs shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "manifold_l1/mesh.hpp"
#include "manifold_l1/operators.hpp"

namespace fixture {

using manifold_l1::Index;
using manifold_l1::SparseMatrix;
using manifold_l1::TriangleMesh;

using Rng = std::mt19937_64;

inline TriangleMesh single_triangle(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& p2) {
  return TriangleMesh({p0, p1, p2}, {{0, 1, 2}});
}

inline TriangleMesh unit_right_triangle() {
  return single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
}

/// Moves every vertex by a uniform random offset of at most
/// `amplitude * mean_edge_length` per coordinate.
inline TriangleMesh jittered(const TriangleMesh& mesh, double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = amplitude * mesh.mean_edge_length();
  std::vector<manifold_l1::Point> v = mesh.vertices();
  for (auto& p : v) p += h * Eigen::Vector3d(u(rng), u(rng), u(rng));
  return TriangleMesh(std::move(v), mesh.faces());
}

/// About 1k vertices: octahedron refined four times onto the sphere, jittered.
inline TriangleMesh kilo_mesh(std::uint64_t seed = 7) {
  return jittered(manifold_l1::make_octasphere(4), 0.2, seed);
}

inline Eigen::VectorXd random_vector(Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

/// Random triangle with vertices in the unit cube, rejecting slivers.
inline std::array<Eigen::Vector3d, 3> random_triangle(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    std::array<Eigen::Vector3d, 3> p;
    for (auto& x : p) x = Eigen::Vector3d(u(rng), u(rng), u(rng));
    const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
    const double longest = std::max({(p[1] - p[0]).norm(), (p[2] - p[1]).norm(), (p[0] - p[2]).norm()});
    if (area > 0.05 * longest * longest) return p;
  }
}

/// Sparse symmetric matrix with a random pattern (about `per_row` off-diagonal
/// entries per row) and diagonal entries drawn from [diag_lo, diag_hi].
inline SparseMatrix random_symmetric(Index n, int per_row, double diag_lo, double diag_hi, Rng& rng) {
  std::uniform_int_distribution<Index> col(0, n - 1);
  std::uniform_real_distribution<double> off(-1.0, 1.0), diag(diag_lo, diag_hi);
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, diag(rng));
    for (int k = 0; k < per_row; ++k) {
      const Index j = col(rng);
      if (j == i) continue;
      const double v = off(rng);
      t.emplace_back(i, j, v);
      t.emplace_back(j, i, v);
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

/// Random sparse SPD matrix: strictly diagonally dominant.
inline SparseMatrix random_spd(Index n, int per_row, Rng& rng) {
  SparseMatrix m = random_symmetric(n, per_row, 0.0, 1.0, rng);
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (it.row() != it.col()) rowsum[it.row()] += std::abs(it.value());
  for (Index i = 0; i < n; ++i) m.coeffRef(i, i) += rowsum[i] + 0.5;
  return m;
}

/// Per-test scratch directory under the system temp dir, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("manifold_l1_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
