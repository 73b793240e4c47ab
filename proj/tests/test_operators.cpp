#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "manifold_l1/mesh_io.hpp"
#include "manifold_l1/operators.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace manifold_l1;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("equilateral triangle stiffness", "[operators]") {
  const TriangleMesh eq = fixture::single_triangle({0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0});
  const Eigen::MatrixXd w(cotangent_stiffness(eq));
  const double off = -1.0 / (2.0 * std::sqrt(3.0));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK_THAT(w(i, j), WithinRel(i == j ? -2.0 * off : off, 1e-14));
    }
  }
  CHECK_THAT((w - oracle::fem_stiffness(eq)).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-14));
}

TEST_CASE("stiffness equals the FEM gradient assembly", "[operators]") {
  for (const TriangleMesh& m : {fixture::jittered(make_icosphere(2), 0.3, 1), fixture::jittered(make_grid(8, 6), 0.25, 2),
                                make_tetrahedron()}) {
    const Eigen::MatrixXd w(cotangent_stiffness(m));
    const Eigen::MatrixXd k = oracle::fem_stiffness(m);
    CHECK((w - k).cwiseAbs().maxCoeff() <= 1e-12 * k.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("stiffness symmetry, null space and semidefiniteness", "[operators]") {
  for (const TriangleMesh& m : {fixture::jittered(make_icosphere(2), 0.3, 4), fixture::jittered(make_octasphere(3), 0.3, 5),
                                fixture::jittered(make_grid(12, 12), 0.3, 6)}) {
    REQUIRE(m.n_vertices() <= 300);
    const SparseMatrix w = cotangent_stiffness(m);
    const double scale = inf_norm(w);
    const SparseMatrix asym = w - SparseMatrix(w.transpose());
    CHECK(asym.cwiseAbs().sum() == 0.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_vertices());
    CHECK((w * ones).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(w)};
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * scale);
    for (Index k = 0; k < w.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(w, k); it; ++it) CHECK(it.value() != 0.0);
    CHECK(w.isCompressed());
  }
}

TEST_CASE("obtuse triangles keep negative cotangent weights", "[operators]") {
  const TriangleMesh ob = fixture::single_triangle({0, 0, 0}, {4, 0, 0}, {2, 0.5, 0});
  const Eigen::MatrixXd w(cotangent_stiffness(ob));
  // Edge (0,1) faces the obtuse corner 2, whose cotangent is negative.
  CHECK(w(0, 1) > 0.0);
  CHECK_THAT((w - oracle::fem_stiffness(ob)).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("lumped mass", "[operators]") {
  const DiagonalMatrix a = lumped_mass(fixture::unit_right_triangle());
  for (Index i = 0; i < 3; ++i) CHECK(a.diagonal()[i] == 1.0 / 6.0);
  const TriangleMesh m = fixture::jittered(make_icosphere(2), 0.2, 8);
  CHECK_THAT(lumped_mass(m).diagonal().sum(), WithinRel(m.total_area(), 1e-12));
  CHECK_THAT(lumped_mass(m, CellAreaScheme::MixedVoronoi).diagonal().sum(), WithinRel(m.total_area(), 1e-10));
  CHECK(lumped_mass(m).diagonal().minCoeff() > 0.0);
}

TEST_CASE("sphere area converges to 4 pi", "[operators]") {
  double prev_err = 1.0;
  for (int level = 0; level <= 3; ++level) {
    const double err = std::abs(lumped_mass(make_icosphere(level)).diagonal().sum() - 4.0 * M_PI) / (4.0 * M_PI);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.01);
}

TEST_CASE("first nonconstant Rayleigh quotient approaches 2 on the unit sphere", "[operators]") {
  double prev = 1e9;
  for (int level = 1; level <= 3; ++level) {
    const TriangleMesh m = make_icosphere(level);
    const oracle::GeneralizedEig e =
        oracle::generalized_eig(Eigen::MatrixXd(cotangent_stiffness(m)), lumped_mass(m).diagonal());
    const Eigen::VectorXd phi = e.vectors.col(1);
    const double rq = phi.dot(cotangent_stiffness(m) * phi) / phi.dot(lumped_mass(m) * phi);
    const double err = std::abs(rq - 2.0);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("add_diagonal and inf_norm", "[operators]") {
  const TriangleMesh m = make_octahedron();
  const SparseMatrix w = cotangent_stiffness(m);
  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(m.n_vertices(), 1.0, 2.0);
  const SparseMatrix q = add_diagonal(w, d);
  CHECK(Eigen::MatrixXd(q) == Eigen::MatrixXd(w) + Eigen::MatrixXd(d.asDiagonal()));
  CHECK(q.nonZeros() == w.nonZeros());
  Eigen::MatrixXd dense(w);
  CHECK(inf_norm(w) == dense.cwiseAbs().rowwise().sum().maxCoeff());
  CHECK_THROWS_AS(add_diagonal(w, Eigen::VectorXd::Ones(2)), DimensionMismatch);
}

TEST_CASE("triplet export", "[operators][io]") {
  const SparseMatrix w = cotangent_stiffness(make_tetrahedron());
  std::ostringstream out;
  write_triplets(w, out);
  std::istringstream in(out.str());
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(4, 4);
  Index i, j;
  double v;
  int count = 0;
  while (in >> i >> j >> v) {
    back(i, j) = v;
    ++count;
  }
  CHECK(count == w.nonZeros());
  CHECK((back - Eigen::MatrixXd(w)).cwiseAbs().maxCoeff() == 0.0);
}
