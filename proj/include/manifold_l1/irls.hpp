#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "manifold_l1/errors.hpp"
#include "manifold_l1/l1_norm.hpp"
#include "manifold_l1/operators.hpp"
#include "manifold_l1/sparse_factor.hpp"

namespace manifold_l1 {

/// E(f) = f^T Q f + 2 q^T f + c with Q symmetric positive semidefinite.
struct QuadraticObjective {
  SparseMatrix Q;
  Eigen::VectorXd q;
  double c = 0.0;

  Index size() const { return Q.rows(); }
  double value(const Eigen::VectorXd& f) const { return f.dot(Q * f) + 2.0 * q.dot(f) + c; }
};

enum class Repair { Gersgorin, PsdProject, None };

inline const char* to_string(Repair r) {
  switch (r) {
    case Repair::Gersgorin:
      return "gersgorin";
    case Repair::PsdProject:
      return "psd-project";
    case Repair::None:
      return "none";
  }
  return "?";
}

struct IRLSOptions {
  L1Scheme scheme = L1Scheme::Zeroth;
  double mu = 1.0;
  double epsilon_rel = 1e-8;
  Repair repair = Repair::Gersgorin;
  int max_outer_iters = 100;
  double objective_rel_tol = 1e-10;
  CellAreaScheme area_scheme = CellAreaScheme::Barycentric;
  Index dense_limit = 2000;
  std::optional<Eigen::VectorXd> initial;
};

struct IRLSRecord {
  int iter = 0;
  double objective = 0.0;  // E(f) + mu ||f||
  double surrogate = 0.0;  // value of the weighted-l2 problem that produced f
  int repaired = 0;
  int clamped = 0;
};

struct IRLSHistory {
  std::vector<IRLSRecord> records;
  bool converged = false;

  std::size_t size() const { return records.size(); }

  /// Largest increase of the objective between consecutive records.
  double max_increase() const {
    double worst = 0.0;
    for (std::size_t k = 1; k < records.size(); ++k)
      worst = std::max(worst, records[k].objective - records[k - 1].objective);
    return worst;
  }

  void write_json_lines(std::ostream& out) const {
    char buf[256];
    for (const IRLSRecord& r : records) {
      std::snprintf(buf, sizeof buf,
                    "{\"iter\": %d, \"objective\": %.17g, \"surrogate\": %.17g, \"repaired\": %d, \"clamped\": %d}\n",
                    r.iter, r.objective, r.surrogate, r.repaired, r.clamped);
      out << buf;
    }
  }
};

/// Maps f to the weights w(f) of a discrete L1 norm, ||f|| = f . w(f).
using L1Penalty = std::function<L1Weights(const VertexFunction&)>;

inline L1Penalty zeroth_penalty(CellAreaVector areas) {
  return [a = std::move(areas)](const VertexFunction& f) { return zeroth_order_weights(f, a); };
}

inline L1Penalty mesh_penalty(const TriangleMesh& mesh, L1Scheme scheme,
                              CellAreaScheme area_scheme = CellAreaScheme::Barycentric) {
  if (scheme == L1Scheme::First) {
    return [&mesh](const VertexFunction& f) { return first_order_weights(mesh, f); };
  }
  return [a = vertex_cell_areas(mesh, area_scheme), h = mesh.content_hash()](const VertexFunction& f) {
    return zeroth_order_weights(f, a, h);
  };
}

// ---------------------------------------------------------------------------

/// Number of entries with |f_i| below epsilon_rel * max |f|.
inline int count_clamped(const VertexFunction& f, double epsilon_rel) {
  const double eps = epsilon_rel * (f.size() ? f.cwiseAbs().maxCoeff() : 0.0);
  return static_cast<int>((f.array().abs() < eps).count());
}

/// Weighted-l2 coefficients c_i = w_i / (2 sign(f_i) max(|f_i|, eps)) with
/// eps = epsilon_rel * max |f| and sign(0) taken as +1. Entries with w_i = 0
/// give c_i = 0.
inline DiagonalMatrix reweight(const L1Weights& w, const VertexFunction& f, double epsilon_rel) {
  detail::require_size(f.size(), w.size(), "reweight");
  if (!(epsilon_rel > 0.0)) throw std::invalid_argument("epsilon_rel must be positive");
  const double eps = epsilon_rel * (f.size() ? f.cwiseAbs().maxCoeff() : 0.0);
  Eigen::VectorXd c(f.size());
  for (Index i = 0; i < f.size(); ++i) {
    if (w[i] == 0.0) {
      c[i] = 0.0;
      continue;
    }
    const double s = f[i] < 0.0 ? -1.0 : 1.0;
    c[i] = w[i] / (2.0 * s * std::max(std::abs(f[i]), eps));
  }
  return DiagonalMatrix(c);
}

struct RepairResult {
  SparseMatrix matrix;
  int repaired_count = 0;
};

/// Raises every diagonal entry that does not strictly dominate its row to
/// sum_{j != i} |b_ij| + delta, delta = 1e-12 * max_i sum_j |b_ij|. The result
/// is strictly diagonally dominant with positive diagonal, hence positive
/// definite. Only diagonal values change; a structurally missing diagonal
/// entry is inserted.
inline RepairResult gersgorin_repair(const SparseMatrix& b) {
  const Index n = b.rows();
  Eigen::VectorXd off = Eigen::VectorXd::Zero(n), diag = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < b.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(b, k); it; ++it) {
      if (it.row() == it.col())
        diag[it.row()] += it.value();
      else
        off[it.row()] += std::abs(it.value());
    }
  }
  const double row_max = n ? (off + diag.cwiseAbs()).maxCoeff() : 0.0;
  const double delta = 1e-12 * (row_max > 0.0 ? row_max : 1.0);

  RepairResult result;
  result.matrix = b;
  Eigen::VectorXd raise = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (diag[i] <= off[i]) {
      raise[i] = off[i] + delta - diag[i];
      ++result.repaired_count;
    }
  }
  if (result.repaired_count == 0) return result;
  for (Index i = 0; i < n; ++i) {
    if (raise[i] != 0.0) result.matrix.coeffRef(i, i) += raise[i];
  }
  result.matrix.makeCompressed();
  return result;
}

/// B minus the sum of lambda phi phi^T over its negative eigenpairs.
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& b, Index dense_limit = 2000) {
  if (b.rows() > dense_limit) {
    throw SizeLimitExceeded("psd_project: n = " + std::to_string(b.rows()) + " exceeds dense_limit " +
                            std::to_string(dense_limit));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  Eigen::MatrixXd out = b;
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  for (Index k = 0; k < lambda.size() && lambda[k] < 0.0; ++k) {
    const Eigen::VectorXd phi = eig.eigenvectors().col(k);
    out.noalias() -= lambda[k] * phi * phi.transpose();
  }
  return out;
}

inline Eigen::MatrixXd psd_project(const SparseMatrix& b, Index dense_limit = 2000) {
  if (b.rows() > dense_limit) {
    throw SizeLimitExceeded("psd_project: n = " + std::to_string(b.rows()) + " exceeds dense_limit " +
                            std::to_string(dense_limit));
  }
  return psd_project(Eigen::MatrixXd(b), dense_limit);
}

// ---------------------------------------------------------------------------

namespace detail {

struct RepairedSolve {
  Eigen::VectorXd x;
  double quad = 0.0;  // x^T B_used x
  int repaired = 0;
};

/// Solves B x = rhs, repairing B first when it is not numerically positive
/// definite.
inline RepairedSolve solve_with_repair(const SparseMatrix& b, const Eigen::VectorXd& rhs, Repair repair,
                                       Index dense_limit) {
  RepairedSolve out;
  SparseLDLT factor(b);
  if (factor.positive_definite() || (repair == Repair::None && factor.ok())) {
    out.x = factor.solve(rhs);
    out.quad = out.x.dot(b * out.x);
    return out;
  }
  switch (repair) {
    case Repair::None:
      throw SolveFailure("factorization of the weighted-l2 system failed and repair is disabled");
    case Repair::Gersgorin: {
      RepairResult fixed = gersgorin_repair(b);
      SparseLDLT repaired(fixed.matrix);
      if (!repaired.positive_definite()) throw SolveFailure("factorization failed after Gersgorin repair");
      out.x = repaired.solve(rhs);
      out.quad = out.x.dot(fixed.matrix * out.x);
      out.repaired = fixed.repaired_count;
      return out;
    }
    case Repair::PsdProject: {
      if (b.rows() > dense_limit) {
        throw SizeLimitExceeded("PSD projection needs n <= " + std::to_string(dense_limit));
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(b)};
      const Eigen::VectorXd& lambda = eig.eigenvalues();
      const Eigen::MatrixXd& vecs = eig.eigenvectors();
      // Projected matrix is singular along the clamped directions; take the
      // minimum-norm solution there.
      const double cutoff = 1e-12 * lambda.cwiseAbs().maxCoeff();
      out.x = Eigen::VectorXd::Zero(rhs.size());
      for (Index k = 0; k < lambda.size(); ++k) {
        if (lambda[k] < 0.0) ++out.repaired;
        if (lambda[k] > cutoff) out.x += (vecs.col(k).dot(rhs) / lambda[k]) * vecs.col(k);
      }
      out.quad = 0.0;
      for (Index k = 0; k < lambda.size(); ++k) {
        const double coeff = vecs.col(k).dot(out.x);
        out.quad += std::max(lambda[k], 0.0) * coeff * coeff;
      }
      return out;
    }
  }
  throw SolveFailure("unknown repair mode");
}

}  // namespace detail

struct IRLSResult {
  VertexFunction f;
  IRLSHistory history;
};

/// Minimizer of E alone: solves Q f = -q, falling back to the Gersgorin-repaired
/// Q when Q is singular.
inline VertexFunction unregularized_minimizer(const QuadraticObjective& obj) {
  SparseLDLT factor(obj.Q);
  if (factor.positive_definite()) return factor.solve(Eigen::VectorXd(-obj.q));
  SparseLDLT repaired(gersgorin_repair(obj.Q).matrix);
  if (!repaired.positive_definite()) throw SolveFailure("initial solve failed after Gersgorin repair");
  return repaired.solve(Eigen::VectorXd(-obj.q));
}

/// Minimizes E(f) + mu ||f|| by iteratively reweighted l2.
///
/// Each outer iteration computes w(f), sets C from `reweight`, solves
/// (Q + mu C) f = -q (repairing the matrix only if it is not numerically
/// positive definite) and stops once the relative change of the true
/// objective drops to `objective_rel_tol`.
inline IRLSResult irls_minimize(const L1Penalty& penalty, const QuadraticObjective& obj, const IRLSOptions& opts) {
  const Index n = obj.size();
  if (obj.Q.cols() != n || obj.q.size() != n) throw DimensionMismatch("QuadraticObjective: inconsistent sizes");
  if (!(opts.epsilon_rel > 0.0)) throw std::invalid_argument("epsilon_rel must be positive");
  if (opts.max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
  if (opts.mu < 0.0) throw std::invalid_argument("mu must be nonnegative");

  IRLSResult result;
  VertexFunction f = opts.initial ? *opts.initial : unregularized_minimizer(obj);
  detail::require_size(n, f.size(), "irls_minimize initial value");

  L1Weights w = penalty(f);
  double objective = obj.value(f) + opts.mu * f.dot(w.weights);
  if (!std::isfinite(objective)) throw NonFiniteObjective("initial objective is not finite");
  result.history.records.push_back({0, objective, obj.value(f), 0, 0});

  for (int k = 1; k <= opts.max_outer_iters; ++k) {
    const DiagonalMatrix c = reweight(w, f, opts.epsilon_rel);
    const int clamped = count_clamped(f, opts.epsilon_rel);
    const SparseMatrix b = add_diagonal(obj.Q, opts.mu * c.diagonal());
    const detail::RepairedSolve step = detail::solve_with_repair(b, -obj.q, opts.repair, opts.dense_limit);

    f = step.x;
    w = penalty(f);
    const double next = obj.value(f) + opts.mu * f.dot(w.weights);
    if (!std::isfinite(next)) throw NonFiniteObjective("objective became non-finite at iteration " + std::to_string(k));
    const double surrogate = step.quad + 2.0 * obj.q.dot(f) + obj.c;
    result.history.records.push_back({k, next, surrogate, step.repaired, clamped});

    const double scale = std::max({std::abs(objective), std::abs(next), std::numeric_limits<double>::min()});
    const bool done = std::abs(next - objective) <= opts.objective_rel_tol * scale;
    objective = next;
    if (done) {
      result.history.converged = true;
      break;
    }
  }
  result.f = std::move(f);
  return result;
}

inline IRLSResult irls_minimize(const TriangleMesh& mesh, const QuadraticObjective& obj, const IRLSOptions& opts) {
  detail::require_size(mesh.n_vertices(), obj.size(), "irls_minimize");
  return irls_minimize(mesh_penalty(mesh, opts.scheme, opts.area_scheme), obj, opts);
}

}  // namespace manifold_l1
