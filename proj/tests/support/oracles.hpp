#pragma once

// Reference computations used by the tests. None of them call the routines
// they check.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "manifold_l1/mesh.hpp"

namespace oracle {

using manifold_l1::Index;
using manifold_l1::TriangleMesh;

/// Dense P1 finite-element stiffness: K_ij = sum_t area(t) grad b_i . grad b_j,
/// with grad b_i = n x e_i / (2 area), e_i the edge opposite corner i.
inline Eigen::MatrixXd fem_stiffness(const TriangleMesh& mesh) {
  const Index n = mesh.n_vertices();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (const auto& f : mesh.faces()) {
    const Eigen::Vector3d p[3] = {mesh.vertex(f[0]), mesh.vertex(f[1]), mesh.vertex(f[2])};
    const Eigen::Vector3d normal = (p[1] - p[0]).cross(p[2] - p[0]);
    const double area = 0.5 * normal.norm();
    const Eigen::Vector3d unit = normal.normalized();
    Eigen::Vector3d grad[3];
    for (int i = 0; i < 3; ++i) grad[i] = unit.cross(p[(i + 2) % 3] - p[(i + 1) % 3]) / (2.0 * area);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) k(f[i], f[j]) += area * grad[i].dot(grad[j]);
  }
  return k;
}

/// Textbook Cholesky; true iff every pivot is positive.
inline bool cholesky_succeeds(const Eigen::MatrixXd& m) {
  const Index n = m.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = m(j, j);
    for (Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

/// argmin_f (f - t)^2 + mu a |f|.
inline double soft_threshold(double t, double mu, double a = 1.0) {
  const double shrink = std::max(std::abs(t) - 0.5 * mu * a, 0.0);
  return t < 0.0 ? -shrink : shrink;
}

/// Integral over the triangle of b_i sign(f_hat), by equal-weight sampling
/// at the centroids of an N x N split of the reference triangle
/// (N^2 ~ samples).
inline std::array<double, 3> sampled_sign_weights(double area, const std::array<double, 3>& f, long samples) {
  const long n = std::max(1L, std::lround(std::sqrt(static_cast<double>(samples))));
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  long count = 0;
  auto visit = [&](double s, double t) {
    const double b[3] = {1.0 - s - t, s, t};
    const double value = b[0] * f[0] + b[1] * f[1] + b[2] * f[2];
    const double sg = (value > 0.0) - (value < 0.0);
    for (int i = 0; i < 3; ++i) acc[i] += b[i] * sg;
    ++count;
  };
  const double h = 1.0 / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; i + j < n; ++j) {
      visit((i + 1.0 / 3.0) * h, (j + 1.0 / 3.0) * h);
      if (i + j + 1 < n) visit((i + 2.0 / 3.0) * h, (j + 2.0 / 3.0) * h);
    }
  }
  for (double& v : acc) v *= area / static_cast<double>(count);
  return acc;
}

namespace detail {

/// int_0^L (alpha + beta t) sign(g0 + g1 t) dt for a linear g, exact.
inline double signed_linear_integral(double alpha, double beta, double g0, double g1, double len) {
  auto prim = [&](double t) { return alpha * t + 0.5 * beta * t * t; };
  auto sg = [](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); };
  std::vector<double> cuts{0.0};
  if (g1 != 0.0) {
    const double root = -g0 / g1;
    if (root > 0.0 && root < len) cuts.push_back(root);
  }
  cuts.push_back(len);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    total += sg(g0 + g1 * mid) * (prim(cuts[k + 1]) - prim(cuts[k]));
  }
  return total;
}

}  // namespace detail

/// Same integral as `sampled_sign_weights`, computed by slicing: along each
/// line s = const the integrand is linear with one sign break, integrated
/// exactly; the outer integral uses Gauss-Legendre panels split at the values
/// of s where the zero line meets the triangle boundary, where it is a
/// polynomial. Accurate to rounding.
inline std::array<double, 3> sliced_sign_weights(double area, const std::array<double, 3>& f) {
  // Point = v0 + s (v1 - v0) + t (v2 - v0); b = (1 - s - t, s, t); dA = 2 area ds dt.
  std::vector<double> breaks{0.0, 1.0};
  auto add = [&](double s) {
    if (s > 0.0 && s < 1.0) breaks.push_back(s);
  };
  // Zero line meets t = 0 where f0 + s (f1 - f0) = 0.
  if (f[1] != f[0]) add(-f[0] / (f[1] - f[0]));
  // and t = 1 - s where f2 + s (f1 - f2) = 0.
  if (f[1] != f[2]) add(-f[2] / (f[1] - f[2]));
  std::sort(breaks.begin(), breaks.end());
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    for (int q = 0; q < 5; ++q) {
      const double s = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
      const double w = 0.5 * (b - a) * gw[q];
      const double len = 1.0 - s;
      const double g0 = f[0] + s * (f[1] - f[0]), g1 = f[2] - f[0];
      out[0] += w * detail::signed_linear_integral(1.0 - s, -1.0, g0, g1, len);
      out[1] += w * detail::signed_linear_integral(s, 0.0, g0, g1, len);
      out[2] += w * detail::signed_linear_integral(0.0, 1.0, g0, g1, len);
    }
  }
  for (double& v : out) v *= 2.0 * area;
  return out;
}

/// Sum over faces of the sliced integral of |f_hat| = sum_i f_i w_i.
inline double sliced_norm(const TriangleMesh& mesh, const Eigen::VectorXd& f) {
  double total = 0.0;
  for (Index t = 0; t < mesh.n_faces(); ++t) {
    const auto& face = mesh.face(t);
    const std::array<double, 3> vals{f[face[0]], f[face[1]], f[face[2]]};
    const auto w = sliced_sign_weights(mesh.face_area(t), vals);
    for (int i = 0; i < 3; ++i) total += vals[i] * w[i];
  }
  return total;
}

/// Generalized symmetric eigenproblem B x = lambda diag(a) x, ascending,
/// A-orthonormal eigenvectors.
struct GeneralizedEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline GeneralizedEig generalized_eig(const Eigen::MatrixXd& b, const Eigen::VectorXd& a) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(b, Eigen::MatrixXd(a.asDiagonal()));
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Largest principal angle (sine) between the column spans of X and Y, both
/// A-orthonormal.
inline double subspace_sine(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& a) {
  const Eigen::MatrixXd residual = x - y * (y.transpose() * a.asDiagonal() * x);
  const Eigen::MatrixXd g = residual.transpose() * a.asDiagonal() * residual;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace oracle
