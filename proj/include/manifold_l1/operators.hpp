#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

#include "manifold_l1/mesh.hpp"

namespace manifold_l1 {

using SparseMatrix = Eigen::SparseMatrix<double>;
using DiagonalMatrix = Eigen::DiagonalMatrix<double, Eigen::Dynamic>;
using Triplet = Eigen::Triplet<double>;

/// Cotangent stiffness matrix W (positive semidefinite).
///
/// W_ij = -(cot a_ij + cot b_ij) / 2 over the triangles sharing edge (i, j) and
/// W_ii = -sum_j W_ij. Cotangents come from dot and cross products of edge
/// vectors. Negative weights (obtuse angles) are kept.
inline SparseMatrix cotangent_stiffness(const TriangleMesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.n_faces()) * 12);
  for (const Face& f : mesh.faces()) {
    for (int k = 0; k < 3; ++k) {
      const Index o = f[k], i = f[(k + 1) % 3], j = f[(k + 2) % 3];
      const Point u = mesh.vertex(i) - mesh.vertex(o);
      const Point v = mesh.vertex(j) - mesh.vertex(o);
      const double half_cot = 0.5 * u.dot(v) / u.cross(v).norm();
      trip.emplace_back(i, j, -half_cot);
      trip.emplace_back(j, i, -half_cot);
      trip.emplace_back(i, i, half_cot);
      trip.emplace_back(j, j, half_cot);
    }
  }
  SparseMatrix w(mesh.n_vertices(), mesh.n_vertices());
  w.setFromTriplets(trip.begin(), trip.end());
  w.prune([](Index, Index, double value) { return value != 0.0; });
  w.makeCompressed();
  return w;
}

/// Diagonal mass matrix A = diag(a_i).
inline DiagonalMatrix lumped_mass(const TriangleMesh& mesh, CellAreaScheme scheme = CellAreaScheme::Barycentric) {
  return DiagonalMatrix(vertex_cell_areas(mesh, scheme).areas);
}

/// Max absolute row sum.
inline double inf_norm(const SparseMatrix& m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

/// Q + diag(d).
inline SparseMatrix add_diagonal(const SparseMatrix& q, const Eigen::VectorXd& d) {
  if (q.rows() != q.cols() || d.size() != q.rows()) {
    throw DimensionMismatch("add_diagonal: diagonal of size " + std::to_string(d.size()) + " for a " +
                            std::to_string(q.rows()) + "x" + std::to_string(q.cols()) + " matrix");
  }
  SparseMatrix diag(q.rows(), q.cols());
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) trip.emplace_back(i, i, d[i]);
  diag.setFromTriplets(trip.begin(), trip.end());
  SparseMatrix out = q + diag;
  out.makeCompressed();
  return out;
}

}  // namespace manifold_l1
