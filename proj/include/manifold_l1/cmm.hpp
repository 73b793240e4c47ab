#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "manifold_l1/errors.hpp"
#include "manifold_l1/irls.hpp"
#include "manifold_l1/l1_norm.hpp"
#include "manifold_l1/mesh.hpp"
#include "manifold_l1/operators.hpp"
#include "manifold_l1/spectral.hpp"

namespace manifold_l1 {

enum class SolverBackend { Woodbury, Dense };

inline const char* to_string(SolverBackend b) { return b == SolverBackend::Woodbury ? "woodbury" : "dense"; }

struct CMMOptions {
  int k = 8;
  double mu = 0.0;
  L1Scheme scheme = L1Scheme::Zeroth;
  Repair repair = Repair::Gersgorin;
  std::optional<double> beta_override;
  int max_irls_iters = 30;
  double irls_rel_tol = 1e-6;
  double epsilon_rel = 1e-8;
  std::optional<unsigned> seed;
  CellAreaScheme area_scheme = CellAreaScheme::Barycentric;
  SolverBackend backend = SolverBackend::Woodbury;
  EigenOptions eigen;
  Index dense_limit = 2000;
  double support_tau = 1e-3;
  /// Final A-Gram-Schmidt pass over the modes in computation order.
  bool orthonormalize = true;
};

/// Diagonal potential v; the CMM operator is W + mu A diag(v).
struct Potential {
  Eigen::VectorXd v;
  Index size() const { return v.size(); }
};

/// Zeroth: v_i = 1 / (2 max(|phi_i|, eps)).
/// First:  v_i = w_i(phi) / (2 a_i sign(phi_i) max(|phi_i|, eps)), sign(0) = +1,
/// so that mu a_i v_i is the IRLS coefficient c_i.
inline Potential potential_from_mode(const TriangleMesh& mesh, const CellAreaVector& a, const VertexFunction& phi,
                                     L1Scheme scheme, double epsilon_rel) {
  detail::require_size(a.size(), phi.size(), "potential_from_mode");
  detail::require_size(mesh.n_vertices(), phi.size(), "potential_from_mode");
  if (!(epsilon_rel > 0.0)) throw std::invalid_argument("epsilon_rel must be positive");
  Potential p;
  if (scheme == L1Scheme::Zeroth) {
    const double eps = epsilon_rel * (phi.size() ? phi.cwiseAbs().maxCoeff() : 0.0);
    p.v = phi.unaryExpr([eps](double x) { return 1.0 / (2.0 * std::max(std::abs(x), eps)); });
    return p;
  }
  const DiagonalMatrix c = reweight(first_order_weights(mesh, phi), phi, epsilon_rel);
  p.v = c.diagonal().cwiseQuotient(a.areas);
  return p;
}

/// Area fraction of vertices with |phi_i| > tau max |phi|.
inline double support_fraction(const VertexFunction& phi, const CellAreaVector& a, double tau) {
  detail::require_size(a.size(), phi.size(), "support_fraction");
  if (!(tau > 0.0)) throw std::invalid_argument("support_fraction: tau must be positive");
  const double cut = tau * phi.cwiseAbs().maxCoeff();
  double inside = 0.0;
  for (Index i = 0; i < phi.size(); ++i)
    if (std::abs(phi[i]) > cut) inside += a[i];
  return inside / a.sum();
}

struct ModeSet {
  Eigen::MatrixXd modes;  // n x k, A-orthonormal columns
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd dirichlet_energies;  // phi^T W phi
  std::vector<IRLSHistory> histories;
  std::vector<double> support_fractions;
  double orthogonality_error = 0.0;  // max off-diagonal |Phi^T A Phi| before the final pass
  CMMOptions options;

  Index size() const { return modes.cols(); }
  VertexFunction mode(Index j) const { return modes.col(j); }
};

/// max |(Phi^T A Phi)_ij| for i != j, and max |(Phi^T A Phi)_ii - 1|.
inline std::pair<double, double> orthonormality_errors(const Eigen::MatrixXd& phi, const DiagonalMatrix& a) {
  const Eigen::MatrixXd g = phi.transpose() * a.diagonal().asDiagonal() * phi;
  double off = 0.0, diag = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    diag = std::max(diag, std::abs(g(i, i) - 1.0));
    for (Index j = 0; j < g.cols(); ++j)
      if (i != j) off = std::max(off, std::abs(g(i, j)));
  }
  return {off, diag};
}

namespace detail {

inline EigenResult run_eigensolver(SolverBackend backend, Index dense_limit, const SparseMatrix& q,
                                   const LowRankFactor& u, const DiagonalMatrix& a, const EigenOptions& opts) {
  if (backend == SolverBackend::Dense) {
    DenseSolver solver(dense_limit);
    return smallest_generalized_eigpair_with(solver, q, u, a, opts);
  }
  WoodburySolver solver;
  return smallest_generalized_eigpair_with(solver, q, u, a, opts);
}

}  // namespace detail

/// Compressed manifold modes.
///
/// Modes are computed one at a time. For mode i the potential starts at zero,
/// so the first pass yields the deflated harmonic mode; every further pass
/// solves the smallest eigenpair of (W + mu A V + U U^T, A), with U the
/// deflation factor of the previous modes, and recomputes V from the new mode.
/// Iteration stops when phi^T W phi + mu ||phi|| changes by less than
/// `irls_rel_tol` relative.
inline ModeSet compressed_modes(const TriangleMesh& mesh, const CMMOptions& opts) {
  if (opts.k < 1) throw std::invalid_argument("compressed_modes: k must be >= 1");
  if (opts.mu < 0.0) throw std::invalid_argument("compressed_modes: mu must be nonnegative");
  if (opts.max_irls_iters < 1) throw std::invalid_argument("compressed_modes: max_irls_iters must be >= 1");
  const Index n = mesh.n_vertices();
  if (opts.k > n) throw std::invalid_argument("compressed_modes: k exceeds the number of vertices");

  const SparseMatrix w = cotangent_stiffness(mesh);
  const CellAreaVector areas = vertex_cell_areas(mesh, opts.area_scheme);
  const DiagonalMatrix a(areas.areas);

  auto discrete_objective = [&](const VertexFunction& phi) {
    const double l1 = opts.scheme == L1Scheme::Zeroth ? norm_zeroth(phi, areas) : norm_first(mesh, phi);
    return phi.dot(w * phi) + opts.mu * l1;
  };

  ModeSet out;
  out.options = opts;
  std::vector<Eigen::VectorXd> prev;
  std::vector<double> lambdas;

  for (int i = 0; i < opts.k; ++i) {
    IRLSHistory history;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    std::optional<Eigen::VectorXd> phi;
    double last_objective = 0.0, lambda = 0.0;

    for (int t = 1; t <= opts.max_irls_iters; ++t) {
      const Eigen::VectorXd diag = opts.mu * areas.areas.cwiseProduct(v);
      SparseMatrix q = add_diagonal(w, diag);
      int repaired = 0;
      if ((diag.array() < 0.0).any()) {
        if (opts.repair == Repair::Gersgorin) {
          RepairResult r = gersgorin_repair(q);
          q = std::move(r.matrix);
          repaired = r.repaired_count;
        } else if (opts.repair == Repair::PsdProject) {
          const Eigen::MatrixXd dense(q);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
          repaired = static_cast<int>((eig.eigenvalues().array() < 0.0).count());
          q = psd_project(dense, opts.dense_limit).sparseView();
        }
      }

      const double beta = opts.beta_override ? *opts.beta_override : 10.0 * gersgorin_upper_bound(q, a);
      const LowRankFactor u = prev.empty() ? LowRankFactor::empty(n) : deflation_factor(a, prev, beta);

      EigenOptions eopts = opts.eigen;
      if (phi) {
        eopts.start = *phi;
      } else if (opts.seed) {
        eopts.seed = *opts.seed + static_cast<unsigned>(i);
      }
      const EigenResult eig = detail::run_eigensolver(opts.backend, opts.dense_limit, q, u, a, eopts);
      phi = eig.eigenvector;
      lambda = eig.eigenvalue;

      const double objective = discrete_objective(*phi);
      if (!std::isfinite(objective)) throw NonFiniteObjective("CMM objective became non-finite");
      history.records.push_back({t, objective, eig.eigenvalue, repaired, count_clamped(*phi, opts.epsilon_rel)});

      if (opts.mu == 0.0) {
        // No potential: every further pass reproduces this mode.
        history.converged = true;
        break;
      }
      if (t > 1 && std::abs(objective - last_objective) <= opts.irls_rel_tol * std::abs(objective)) {
        history.converged = true;
        break;
      }
      last_objective = objective;
      v = potential_from_mode(mesh, areas, *phi, opts.scheme, opts.epsilon_rel).v;
    }
    prev.push_back(*phi);
    lambdas.push_back(lambda);
    out.histories.push_back(std::move(history));
  }

  Eigen::MatrixXd phi_all(n, opts.k);
  for (int j = 0; j < opts.k; ++j) phi_all.col(j) = prev[static_cast<std::size_t>(j)];
  out.orthogonality_error = orthonormality_errors(phi_all, a).first;
  if (out.orthogonality_error > 1e-4) {
    throw OrthogonalityLoss("modes lost A-orthogonality (max |phi_i^T A phi_j| = " +
                            std::to_string(out.orthogonality_error) + "); increase beta");
  }
  if (opts.orthonormalize) {
    for (int j = 0; j < opts.k; ++j) {
      Eigen::VectorXd x = phi_all.col(j);
      detail::a_orthogonalize(a, phi_all, j, x);
      x /= detail::a_norm(a, x);
      detail::fix_sign(x);
      phi_all.col(j) = x;
    }
  }

  std::vector<int> order(static_cast<std::size_t>(opts.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return lambdas[x] < lambdas[y]; });

  out.modes.resize(n, opts.k);
  out.eigenvalues.resize(opts.k);
  out.dirichlet_energies.resize(opts.k);
  std::vector<IRLSHistory> histories;
  for (int j = 0; j < opts.k; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    out.modes.col(j) = phi_all.col(src);
    out.eigenvalues[j] = lambdas[static_cast<std::size_t>(src)];
    out.dirichlet_energies[j] = out.modes.col(j).dot(w * out.modes.col(j));
    histories.push_back(std::move(out.histories[static_cast<std::size_t>(src)]));
    out.support_fractions.push_back(support_fraction(out.modes.col(j), areas, opts.support_tau));
  }
  out.histories = std::move(histories);
  return out;
}

}  // namespace manifold_l1
