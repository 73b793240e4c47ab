#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "manifold_l1/errors.hpp"
#include "manifold_l1/mesh.hpp"
#include "manifold_l1/parallel.hpp"

namespace manifold_l1 {

/// Discretization used for the L1 term.
enum class L1Scheme { Zeroth, First };

inline const char* to_string(L1Scheme s) { return s == L1Scheme::Zeroth ? "zeroth" : "first"; }

/// Weights w(f) such that the discrete L1 norm equals f . w(f).
struct L1Weights {
  Eigen::VectorXd weights;
  L1Scheme scheme = L1Scheme::Zeroth;
  std::uint64_t source_hash = 0;

  Index size() const { return weights.size(); }
  double operator[](Index i) const { return weights[i]; }
};

inline double signum(double x) { return (x > 0.0) - (x < 0.0); }

namespace detail {

inline void require_size(Index expected, Index got, const char* what) {
  if (expected != got) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(expected) + " values, got " +
                            std::to_string(got));
  }
}

inline std::uint64_t function_hash(std::uint64_t seed, const VertexFunction& f) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  h *= 1099511628211ull;
  hash_bytes(h, f.data(), static_cast<std::size_t>(f.size()) * sizeof(double));
  return h;
}

}  // namespace detail

/// Sum of |f_i|, with no geometry.
inline double norm_naive(const VertexFunction& f) { return f.cwiseAbs().sum(); }

/// Area-weighted zeroth-order norm, sum |f_i| a_i.
inline double norm_zeroth(const VertexFunction& f, const CellAreaVector& a) {
  detail::require_size(a.size(), f.size(), "norm_zeroth");
  return f.cwiseAbs().dot(a.areas);
}

/// w_i = a_i sign(f_i).
inline L1Weights zeroth_order_weights(const VertexFunction& f, const CellAreaVector& a, std::uint64_t mesh_hash = 0) {
  detail::require_size(a.size(), f.size(), "zeroth_order_weights");
  L1Weights w;
  w.scheme = L1Scheme::Zeroth;
  w.weights = f.unaryExpr([](double x) { return signum(x); }).cwiseProduct(a.areas);
  w.source_hash = detail::function_hash(mesh_hash, f);
  return w;
}

/// Contribution of one triangle to the first-order weights:
/// out[k] = integral over the triangle of b_k * sign(f_hat).
///
/// Uniform-sign triangles (zeros count as either sign) contribute
/// s * area / 3. Otherwise the zero line of the linear interpolant cuts the
/// triangle into a positive and a negative polygon. Each polygon is described
/// in barycentric coordinates, fanned into sub-triangles, and integrated
/// exactly: the hat functions are linear, so the integral over a sub-triangle
/// is its area times the mean of the corner values. Quadrilaterals are fanned
/// from their original-triangle corner with the smallest global index.
inline std::array<double, 3> triangle_sign_weights(double area, const std::array<double, 3>& f,
                                                   const std::array<Index, 3>& ids) {
  const bool has_pos = f[0] > 0.0 || f[1] > 0.0 || f[2] > 0.0;
  const bool has_neg = f[0] < 0.0 || f[1] < 0.0 || f[2] < 0.0;
  if (!(has_pos && has_neg)) {
    const double s = has_pos ? 1.0 : (has_neg ? -1.0 : 0.0);
    const double third = s * area / 3.0;
    return {third, third, third};
  }

  using Bary = Eigen::Vector3d;
  struct Corner {
    Bary b;
    int original;  // triangle corner index, or -1 for a zero crossing
  };
  const std::array<Bary, 3> unit = {Bary::UnitX(), Bary::UnitY(), Bary::UnitZ()};

  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (const double side : {1.0, -1.0}) {
    std::vector<Corner> poly;
    poly.reserve(4);
    for (int e = 0; e < 3; ++e) {
      const int p = e, q = (e + 1) % 3;
      if (side * f[p] >= 0.0) poly.push_back({unit[p], p});
      if ((f[p] > 0.0 && f[q] < 0.0) || (f[p] < 0.0 && f[q] > 0.0)) {
        const double tau = f[p] / (f[p] - f[q]);
        poly.push_back({(1.0 - tau) * unit[p] + tau * unit[q], -1});
      }
    }
    if (poly.size() < 3) continue;
    std::size_t start = 0;
    if (poly.size() == 4) {
      Index best = -1;
      for (std::size_t c = 0; c < poly.size(); ++c) {
        if (poly[c].original < 0) continue;
        const Index id = ids[static_cast<std::size_t>(poly[c].original)];
        if (best < 0 || id < best) {
          best = id;
          start = c;
        }
      }
    }
    const std::size_t m = poly.size();
    for (std::size_t k = 1; k + 1 < m; ++k) {
      const Bary& b0 = poly[start].b;
      const Bary& b1 = poly[(start + k) % m].b;
      const Bary& b2 = poly[(start + k + 1) % m].b;
      Eigen::Matrix3d corners;
      corners << b0.transpose(), b1.transpose(), b2.transpose();
      const double sub_area = area * std::abs(corners.determinant());
      const Bary mean = (b0 + b1 + b2) / 3.0;
      for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] += side * sub_area * mean[i];
    }
  }
  return out;
}

/// First-order weights w_i(f) = integral of b_i * sign(f_hat) over the mesh.
///
/// Per-face contributions are computed independently and then accumulated in
/// face order, so the result is bitwise identical for any thread count.
inline L1Weights first_order_weights(const TriangleMesh& mesh, const VertexFunction& f) {
  detail::require_size(mesh.n_vertices(), f.size(), "first_order_weights");
  const Index m = mesh.n_faces();
  std::vector<std::array<double, 3>> per_face(static_cast<std::size_t>(m));
  parallel_for_chunks(m, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t t = begin; t < end; ++t) {
      const Face& face = mesh.face(t);
      per_face[static_cast<std::size_t>(t)] =
          triangle_sign_weights(mesh.face_area(t), {f[face[0]], f[face[1]], f[face[2]]}, face);
    }
  });
  L1Weights w;
  w.scheme = L1Scheme::First;
  w.weights = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (Index t = 0; t < m; ++t) {
    const Face& face = mesh.face(t);
    for (int k = 0; k < 3; ++k) w.weights[face[k]] += per_face[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
  }
  w.source_hash = detail::function_hash(mesh.content_hash(), f);
  return w;
}

/// Exact integral of |f_hat| for the piecewise-linear interpolant.
inline double norm_first(const TriangleMesh& mesh, const VertexFunction& f) {
  return f.dot(first_order_weights(mesh, f).weights);
}

// ---------------------------------------------------------------------------
// Quadrature reference

/// Barycentric centroids of the N^2 congruent sub-triangles of a regular
/// N x N split of the reference triangle, N = round(sqrt(points)). The set is
/// symmetric with mean (1/3, 1/3, 1/3), so linear integrands are exact.
inline std::vector<Eigen::Vector3d> triangle_lattice_points(int points_per_triangle) {
  if (points_per_triangle < 1) throw std::invalid_argument("points_per_triangle must be >= 1");
  const int n = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(points_per_triangle)))));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  const double d = 3.0 * n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n; ++j) {
      double s = (3 * i + 1) / d, t = (3 * j + 1) / d;
      pts.emplace_back(1.0 - s - t, s, t);
      if (i + j <= n - 2) {
        s = (3 * i + 2) / d;
        t = (3 * j + 2) / d;
        pts.emplace_back(1.0 - s - t, s, t);
      }
    }
  }
  return pts;
}

/// Reference value of the integral of |f_hat| by dense equal-weight
/// quadrature on every face.
inline double quadrature_oracle_norm(const TriangleMesh& mesh, const VertexFunction& f, int points_per_triangle) {
  detail::require_size(mesh.n_vertices(), f.size(), "quadrature_oracle_norm");
  const std::vector<Eigen::Vector3d> pts = triangle_lattice_points(points_per_triangle);
  const Index m = mesh.n_faces();
  std::vector<double> per_face(static_cast<std::size_t>(m), 0.0);
  parallel_for_chunks(m, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t t = begin; t < end; ++t) {
      const Face& face = mesh.face(t);
      const Eigen::Vector3d vals(f[face[0]], f[face[1]], f[face[2]]);
      double acc = 0.0;
      for (const auto& b : pts) acc += std::abs(vals.dot(b));
      per_face[static_cast<std::size_t>(t)] = mesh.face_area(t) * acc / static_cast<double>(pts.size());
    }
  });
  double total = 0.0;
  for (double v : per_face) total += v;
  return total;
}

}  // namespace manifold_l1
