#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "manifold_l1/errors.hpp"
#include "manifold_l1/operators.hpp"
#include "manifold_l1/sparse_factor.hpp"

namespace manifold_l1 {

/// U of a symmetric low-rank term U U^T. Zero columns means no low-rank part.
struct LowRankFactor {
  Eigen::MatrixXd U;

  LowRankFactor() = default;
  explicit LowRankFactor(Eigen::MatrixXd u) : U(std::move(u)) {}
  static LowRankFactor empty(Index n) { return LowRankFactor(Eigen::MatrixXd(n, 0)); }

  Index rows() const { return U.rows(); }
  Index rank() const { return U.cols(); }
};

/// U = sqrt(beta) A Phi, so that U U^T = beta A Phi Phi^T A.
inline LowRankFactor deflation_factor(const DiagonalMatrix& a, const std::vector<Eigen::VectorXd>& prev_modes,
                                      double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("deflation_factor: beta must be positive");
  const Index n = a.rows();
  Eigen::MatrixXd u(n, static_cast<Index>(prev_modes.size()));
  const double s = std::sqrt(beta);
  for (std::size_t j = 0; j < prev_modes.size(); ++j) {
    if (prev_modes[j].size() != n) throw DimensionMismatch("deflation_factor: mode length does not match A");
    u.col(static_cast<Index>(j)) = s * a.diagonal().cwiseProduct(prev_modes[j]);
  }
  return LowRankFactor(std::move(u));
}

/// Upper bound on the generalized spectrum of (Q, A): max_i sum_j |q_ij| / a_i.
inline double gersgorin_upper_bound(const SparseMatrix& q, const DiagonalMatrix& a) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(q.rows());
  for (Index k = 0; k < q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(q, k); it; ++it) rows[it.row()] += std::abs(it.value());
  double bound = 0.0;
  for (Index i = 0; i < rows.size(); ++i) bound = std::max(bound, rows[i] / a.diagonal()[i]);
  return bound;
}

/// (Q + U U^T)^{-1} through the Woodbury identity.
///
/// `factorize` computes the sparse factorization of Q once; `set_low_rank`
/// forms Q^{-1} U and Cholesky-factorizes the r x r core I + U^T Q^{-1} U.
/// Each solve is then one sparse solve plus O(n r) work.
class WoodburySolver {
 public:
  static constexpr const char* kName = "woodbury";

  /// Returns false if Q is not numerically positive definite.
  bool factorize(const SparseMatrix& q) {
    factor_.compute(q);
    factorized_ = factor_.positive_definite();
    q_ = q;
    n_ = q.rows();
    low_rank_set_ = false;
    return factorized_;
  }

  void set_low_rank(const LowRankFactor& u) {
    if (!factorized_) throw FactorizationRequired("Woodbury solve requested before factorizing Q");
    if (u.rows() != n_ && u.rank() > 0) throw DimensionMismatch("low-rank factor has the wrong number of rows");
    u_ = u.U;
    if (u.rank() == 0) {
      qinv_u_.resize(n_, 0);
      low_rank_set_ = true;
      return;
    }
    qinv_u_ = factor_.solve(u_);
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(u.rank(), u.rank()) + u_.transpose() * qinv_u_;
    core = 0.5 * (core + core.transpose());
    core_.compute(core);
    const Eigen::VectorXd d = core_.vectorD();
    const bool ok = core_.info() == Eigen::Success && (d.array() > 0.0).all() && d.allFinite() &&
                    d.minCoeff() > 1e-14 * d.maxCoeff();
    if (!ok) throw CoreSingular("Woodbury core I + U^T Q^-1 U is numerically singular");
    const Eigen::VectorXd u_rows = u_.cwiseAbs().rowwise().sum();
    op_norm_ = inf_norm(q_) + u_rows.maxCoeff() * u_rows.sum();  // bound on ||Q + U U^T||_inf
    low_rank_set_ = true;
  }

  bool ready() const { return factorized_ && low_rank_set_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (!factorized_) throw FactorizationRequired("Woodbury solve requested before factorizing Q");
    if (rhs.size() != n_) throw DimensionMismatch("Woodbury solve: rhs has the wrong length");
    if (!low_rank_set_ || u_.cols() == 0) return factor_.solve(rhs);
    // A nearly singular Q makes the Woodbury identity lose digits to
    // cancellation; refine against Q + U U^T until the backward error is at
    // roundoff level or stops improving.
    Eigen::VectorXd x = woodbury(rhs);
    const double rhs_norm = rhs.cwiseAbs().maxCoeff();
    double last = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kMaxRefinements; ++step) {
      const Eigen::VectorXd r = rhs - q_ * x - u_ * (u_.transpose() * x);
      const double err = r.cwiseAbs().maxCoeff();
      if (err <= 8.0 * std::numeric_limits<double>::epsilon() * (op_norm_ * x.cwiseAbs().maxCoeff() + rhs_norm) ||
          !(err < 0.5 * last))
        break;
      last = err;
      x += woodbury(r);
    }
    return x;
  }

 private:
  static constexpr int kMaxRefinements = 8;

  // Q xi = U core^{-1} U^T psi, with Q^{-1} U already at hand.
  Eigen::VectorXd woodbury(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd psi = factor_.solve(rhs);
    const Eigen::VectorXd t = core_.solve(u_.transpose() * psi);
    psi.noalias() -= qinv_u_ * t;
    return psi;
  }

  SparseLDLT factor_;
  SparseMatrix q_;
  Eigen::MatrixXd u_, qinv_u_;
  Eigen::LDLT<Eigen::MatrixXd> core_;
  double op_norm_ = 0.0;
  Index n_ = 0;
  bool factorized_ = false;
  bool low_rank_set_ = false;
};

/// Same interface as WoodburySolver, but factors the dense Q + U U^T
/// directly. Reference path for benchmarks and small problems.
class DenseSolver {
 public:
  static constexpr const char* kName = "dense";

  explicit DenseSolver(Index dense_limit = 2000) : dense_limit_(dense_limit) {}

  bool factorize(const SparseMatrix& q) {
    if (q.rows() > dense_limit_) {
      throw SizeLimitExceeded("dense solver: n = " + std::to_string(q.rows()) + " exceeds dense_limit " +
                              std::to_string(dense_limit_) + "; use the Woodbury path");
    }
    q_ = Eigen::MatrixXd(q);
    factorized_ = true;
    // Positive definiteness of Q alone is what the shift logic needs.
    Eigen::LLT<Eigen::MatrixXd> probe(q_);
    factorized_ = probe.info() == Eigen::Success && probe.matrixLLT().diagonal().minCoeff() >
                                                       1e-6 * probe.matrixLLT().diagonal().maxCoeff();
    return factorized_;
  }

  void set_low_rank(const LowRankFactor& u) {
    if (!factorized_) throw FactorizationRequired("dense solve requested before factorizing Q");
    Eigen::MatrixXd b = q_;
    if (u.rank() > 0) b.noalias() += u.U * u.U.transpose();
    llt_.compute(b);
    if (llt_.info() != Eigen::Success) throw CoreSingular("dense Q + U U^T is not positive definite");
    ready_ = true;
  }

  bool ready() const { return ready_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (!ready_) throw FactorizationRequired("dense solve requested before factorizing");
    return llt_.solve(rhs);
  }

 private:
  Index dense_limit_;
  Eigen::MatrixXd q_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool factorized_ = false;
  bool ready_ = false;
};

/// One-off Woodbury application; use WoodburySolver to reuse the core.
inline Eigen::VectorXd woodbury_solve(const SparseMatrix& q, const LowRankFactor& u, const Eigen::VectorXd& rhs) {
  WoodburySolver solver;
  if (!solver.factorize(q)) throw SolveFailure("woodbury_solve: Q is not positive definite");
  solver.set_low_rank(u);
  return solver.solve(rhs);
}

// ---------------------------------------------------------------------------
// Eigensolver

enum class EigenMethod { Lanczos, InverseIteration };

struct EigenOptions {
  EigenMethod method = EigenMethod::Lanczos;
  double tol = 1e-10;  // A-angle between successive iterates, or relative residual
  int max_iters = 500;  // operator applications
  int subspace = 30;    // Krylov basis size before a restart
  int keep = 10;        // Ritz vectors retained on restart
  int max_shift_doublings = 5;
  std::optional<unsigned> seed;         // random start instead of the all-ones vector
  std::optional<Eigen::VectorXd> start;  // warm start, overrides seed
};

struct EigenResult {
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;
  double residual = 0.0;  // ||B phi - lambda A phi|| / ||phi||
  int iterations = 0;
  double shift = 0.0;
};

namespace detail {

inline double a_dot(const DiagonalMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return x.dot(a.diagonal().cwiseProduct(y));
}

inline double a_norm(const DiagonalMatrix& a, const Eigen::VectorXd& x) { return std::sqrt(std::max(0.0, a_dot(a, x, x))); }

/// Makes the entry of largest magnitude positive (first such entry on ties).
inline void fix_sign(Eigen::VectorXd& x) {
  Index arg = 0;
  x.cwiseAbs().maxCoeff(&arg);
  if (x[arg] < 0.0) x = -x;
}

/// Two passes of classical Gram-Schmidt against A-orthonormal columns.
inline void a_orthogonalize(const DiagonalMatrix& a, const Eigen::MatrixXd& basis, Index cols, Eigen::VectorXd& x) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd ax = a.diagonal().cwiseProduct(x);
    const Eigen::VectorXd coeff = basis.leftCols(cols).transpose() * ax;
    x.noalias() -= basis.leftCols(cols) * coeff;
  }
}

struct Operator {
  const SparseMatrix& q;
  const LowRankFactor& u;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = q * x;
    if (u.rank() > 0) y.noalias() += u.U * (u.U.transpose() * x);
    return y;
  }
};

}  // namespace detail

/// Smallest eigenpair of (Q + U U^T) phi = lambda A phi by shift-inverted
/// iteration on the A-inner product.
///
/// If Q is not positive definite, or a probe solve with it is inaccurate, the
/// operator is shifted by sigma A with
/// sigma = 1e-8 trace(Q) / n, doubled up to `max_shift_doublings` times.
/// The Lanczos method keeps an A-orthonormal basis V with images
/// T V, T = (Q + sigma A + U U^T)^{-1} A, performs Rayleigh-Ritz on it and
/// restarts with the leading Ritz vectors when the basis is full. Eigenvalues
/// always come from the Rayleigh quotient of the unshifted pencil.
template <class Solver>
EigenResult smallest_generalized_eigpair_with(Solver& solver, const SparseMatrix& q, const LowRankFactor& u,
                                              const DiagonalMatrix& a, const EigenOptions& opts = {}) {
  const Index n = q.rows();
  if (q.cols() != n || a.rows() != n) throw DimensionMismatch("eigensolver: Q and A sizes differ");
  if (u.rank() > 0 && u.rows() != n) throw DimensionMismatch("eigensolver: U has the wrong number of rows");
  if ((a.diagonal().array() <= 0.0).any()) throw std::invalid_argument("eigensolver: A must be positive");
  if (n == 0) throw std::invalid_argument("eigensolver: empty problem");

  EigenResult result;
  const detail::Operator b{q, u};

  // A factorization counts only if a probe solve has a small backward error:
  // LDL^T pivots alone miss a Q that is singular to roundoff.
  Eigen::VectorXd probe(n);
  for (Index i = 0; i < n; ++i) probe[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i));
  const Eigen::VectorXd u_rows = u.rank() > 0 ? Eigen::VectorXd(u.U.cwiseAbs().rowwise().sum()) : Eigen::VectorXd();
  const double b_norm = inf_norm(q) + (u.rank() > 0 ? u_rows.maxCoeff() * u_rows.sum() : 0.0);
  auto usable = [&](double shift) {
    if (!solver.factorize(shift == 0.0 ? q : add_diagonal(q, shift * a.diagonal()))) return false;
    try {
      solver.set_low_rank(u);
    } catch (const CoreSingular&) {
      return false;
    }
    const Eigen::VectorXd x = solver.solve(probe);
    if (!x.allFinite()) return false;
    const Eigen::VectorXd r = probe - b.apply(x) - shift * a.diagonal().cwiseProduct(x);
    const double scale = (b_norm + shift * a.diagonal().maxCoeff()) * x.cwiseAbs().maxCoeff() + probe.cwiseAbs().maxCoeff();
    return r.cwiseAbs().maxCoeff() <= 1e-10 * scale;
  };

  double sigma = 0.0;
  if (!usable(0.0)) {
    sigma = 1e-8 * q.diagonal().sum() / static_cast<double>(n);
    if (!(sigma > 0.0)) sigma = 1e-8 * inf_norm(q) + 1e-300;
    bool found = false;
    for (int attempt = 0; attempt <= opts.max_shift_doublings; ++attempt, sigma *= 2.0) {
      if (usable(sigma)) {
        found = true;
        break;
      }
    }
    if (!found) throw ShiftFailure("no positive definite shift found for the eigensolver");
  }
  result.shift = sigma;

  auto apply_t = [&](const Eigen::VectorXd& x) { return solver.solve(a.diagonal().cwiseProduct(x)); };

  // Start vector, A-orthogonal to the range of A^{-1} U.
  Eigen::VectorXd x;
  if (opts.start) {
    if (opts.start->size() != n) throw DimensionMismatch("eigensolver: start vector has the wrong length");
    x = *opts.start;
  } else if (opts.seed) {
    std::mt19937_64 rng(*opts.seed);
    std::normal_distribution<double> g;
    x.resize(n);
    for (Index i = 0; i < n; ++i) x[i] = g(rng);
  } else {
    x = Eigen::VectorXd::Ones(n);
  }
  if (u.rank() > 0) {
    Eigen::MatrixXd dirs = a.diagonal().cwiseInverse().asDiagonal() * u.U;
    Index cols = 0;
    for (Index j = 0; j < dirs.cols(); ++j) {
      Eigen::VectorXd d = dirs.col(j);
      detail::a_orthogonalize(a, dirs, cols, d);
      const double nd = detail::a_norm(a, d);
      if (nd > 1e-12 * detail::a_norm(a, dirs.col(j))) dirs.col(cols++) = d / nd;
    }
    const double before = detail::a_norm(a, x);
    detail::a_orthogonalize(a, dirs, cols, x);
    if (detail::a_norm(a, x) < 1e-8 * before) {
      // Start lies in the deflated span; fall back to a pseudo-random vector
      // that depends on the deflation rank, so consecutive modes do not
      // reuse a start whose projection was just removed.
      std::mt19937_64 rng(opts.seed.value_or(0x5eedu) + 0x9e3779b9u * static_cast<unsigned>(cols + 1));
      std::normal_distribution<double> g;
      for (Index i = 0; i < n; ++i) x[i] = g(rng);
      detail::a_orthogonalize(a, dirs, cols, x);
    }
  }
  x /= detail::a_norm(a, x);

  auto finish = [&](Eigen::VectorXd phi, int iters) {
    phi /= detail::a_norm(a, phi);
    detail::fix_sign(phi);
    const Eigen::VectorXd bphi = b.apply(phi);
    result.eigenvalue = phi.dot(bphi);
    result.residual = (bphi - result.eigenvalue * a.diagonal().cwiseProduct(phi)).norm() / phi.norm();
    result.eigenvector = std::move(phi);
    result.iterations = iters;
    return result;
  };

  // Residual of an A-normalized x in the A^{-1} norm, relative to
  // max(|lambda|, 1 / area): the eigenvalue error is of the order of its
  // square, whatever the scale of the potential or the deflation term.
  const double lambda_unit = 1.0 / a.diagonal().sum();
  auto rel_residual = [&](const Eigen::VectorXd& v, double& lambda) {
    const Eigen::VectorXd bv = b.apply(v);
    lambda = v.dot(bv);
    const Eigen::VectorXd r = bv - lambda * a.diagonal().cwiseProduct(v);
    return std::sqrt(r.cwiseAbs2().cwiseQuotient(a.diagonal()).sum()) / std::max(std::abs(lambda), lambda_unit);
  };
  auto a_angle = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& prev) {
    const double c = detail::a_dot(a, v, prev);
    return detail::a_norm(a, v - c * prev);
  };
  // The angle test needs two genuine iterates, so it is skipped on the first step.
  auto converged = [&](int it, double angle, double res) { return res <= opts.tol || (it >= 2 && angle <= opts.tol); };

  double lambda = 0.0, res = rel_residual(x, lambda);
  if (res <= opts.tol) return finish(x, 0);

  if (opts.method == EigenMethod::InverseIteration) {
    for (int it = 1; it <= opts.max_iters; ++it) {
      Eigen::VectorXd y = apply_t(x);
      const double ny = detail::a_norm(a, y);
      if (!(ny > 0.0) || !std::isfinite(ny)) throw SolveFailure("inverse iteration produced a non-finite iterate");
      y /= ny;
      if (detail::a_dot(a, y, x) < 0.0) y = -y;
      const double angle = a_angle(y, x);
      x = std::move(y);
      res = rel_residual(x, lambda);
      if (converged(it, angle, res)) return finish(x, it);
    }
    throw NoConvergence("inverse iteration did not converge", opts.max_iters, res);
  }

  const Index m = std::max<Index>(3, std::min<Index>(opts.subspace, n));
  const Index keep = std::max<Index>(1, std::min<Index>(opts.keep, m - 2));
  Eigen::MatrixXd v(n, m), tv(n, m);
  Index cols = 0;
  v.col(cols++) = x;
  Eigen::VectorXd prev = x;
  for (int it = 1; it <= opts.max_iters; ++it) {
    tv.col(cols - 1) = apply_t(v.col(cols - 1));
    if (!tv.col(cols - 1).allFinite()) throw SolveFailure("shift-invert solve produced non-finite values");

    Eigen::MatrixXd h = v.leftCols(cols).transpose() * a.diagonal().asDiagonal() * tv.leftCols(cols);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(h);
    // Largest Ritz values of T first.
    const Eigen::MatrixXd y = rr.eigenvectors().rowwise().reverse();
    Eigen::VectorXd ritz = v.leftCols(cols) * y.col(0);
    ritz /= detail::a_norm(a, ritz);
    if (detail::a_dot(a, ritz, prev) < 0.0) ritz = -ritz;
    const double angle = a_angle(ritz, prev);
    res = rel_residual(ritz, lambda);
    prev = ritz;
    if (converged(it, angle, res)) return finish(ritz, it);

    Index source = cols - 1;
    if (cols == m) {
      const Index p = std::min(keep, cols);
      const Eigen::MatrixXd vy = v.leftCols(cols) * y.leftCols(p);
      const Eigen::MatrixXd ty = tv.leftCols(cols) * y.leftCols(p);
      v.leftCols(p) = vy;
      tv.leftCols(p) = ty;
      cols = p;
      source = 0;
    }
    // Residuals of all Ritz vectors share one direction; extend along it.
    Eigen::VectorXd next = tv.col(source);
    const double before = detail::a_norm(a, next);
    detail::a_orthogonalize(a, v, cols, next);
    double nn = detail::a_norm(a, next);
    if (!(nn > 1e-12 * before)) {
      // Invariant subspace reached: continue with a fresh direction.
      std::mt19937_64 rng(static_cast<unsigned>(it) * 7919u + 17u);
      std::normal_distribution<double> g;
      for (Index i = 0; i < n; ++i) next[i] = g(rng);
      detail::a_orthogonalize(a, v, cols, next);
      nn = detail::a_norm(a, next);
    }
    v.col(cols++) = next / nn;
  }
  throw NoConvergence("shift-invert Lanczos did not converge", opts.max_iters, res);
}

inline EigenResult smallest_generalized_eigpair(const SparseMatrix& q, const LowRankFactor& u, const DiagonalMatrix& a,
                                               const EigenOptions& opts = {}) {
  WoodburySolver solver;
  return smallest_generalized_eigpair_with(solver, q, u, a, opts);
}

// ---------------------------------------------------------------------------
// Dense reference

struct DenseEigenResult {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // A-orthonormal columns
};

/// Full spectrum of B phi = lambda A phi, ascending.
inline DenseEigenResult dense_generalized_eig(const Eigen::MatrixXd& b, const DiagonalMatrix& a,
                                              Index dense_limit = 2000) {
  const Index n = b.rows();
  if (n > dense_limit) {
    throw SizeLimitExceeded("dense eigensolver: n = " + std::to_string(n) + " exceeds dense_limit " +
                            std::to_string(dense_limit));
  }
  if (b.cols() != n || a.rows() != n) throw DimensionMismatch("dense eigensolver: B and A sizes differ");
  const Eigen::VectorXd s = a.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd c = s.asDiagonal() * b * s.asDiagonal();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  if (eig.info() != Eigen::Success) throw SolveFailure("dense eigensolver failed");
  DenseEigenResult out;
  out.eigenvalues = eig.eigenvalues();
  out.eigenvectors = s.asDiagonal() * eig.eigenvectors();
  for (Index j = 0; j < n; ++j) {
    Eigen::VectorXd col = out.eigenvectors.col(j);
    detail::fix_sign(col);
    out.eigenvectors.col(j) = col;
  }
  return out;
}

inline DenseEigenResult dense_generalized_eig(const SparseMatrix& b, const DiagonalMatrix& a, Index dense_limit = 2000) {
  if (b.rows() > dense_limit) {
    throw SizeLimitExceeded("dense eigensolver: n = " + std::to_string(b.rows()) + " exceeds dense_limit " +
                            std::to_string(dense_limit));
  }
  return dense_generalized_eig(Eigen::MatrixXd(b), a, dense_limit);
}

}  // namespace manifold_l1
