#pragma once

#include <Eigen/SparseCholesky>

#include "manifold_l1/operators.hpp"

namespace manifold_l1 {

/// Sparse LDL^T factorization that also reports whether the matrix is
/// numerically positive definite: every pivot must exceed `pivot_floor`
/// times the largest pivot.
class SparseLDLT {
 public:
  static constexpr double kPivotFloor = 1e-12;

  SparseLDLT() = default;
  explicit SparseLDLT(const SparseMatrix& m) { compute(m); }

  void compute(const SparseMatrix& m) {
    ldlt_.compute(m);
    ok_ = ldlt_.info() == Eigen::Success;
    positive_definite_ = false;
    if (!ok_) return;
    const Eigen::VectorXd d = ldlt_.vectorD();
    if (d.size() == 0) {
      positive_definite_ = true;
      return;
    }
    const double floor = kPivotFloor * d.cwiseAbs().maxCoeff();
    positive_definite_ = (d.array() > floor).all() && d.allFinite();
  }

  bool ok() const { return ok_; }
  bool positive_definite() const { return positive_definite_; }
  Index rows() const { return ldlt_.rows(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return ldlt_.solve(rhs); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return ldlt_.solve(rhs); }

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool ok_ = false;
  bool positive_definite_ = false;
};

}  // namespace manifold_l1
