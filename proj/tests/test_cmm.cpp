#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "manifold_l1/cmm.hpp"
#include "manifold_l1/mode_io.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace manifold_l1;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Largest cluster subspace sine between computed modes and the dense basis.
/// Clusters group dense eigenvalues closer than `gap` relative; each computed
/// cluster is compared against the full dense cluster, which may extend past k.
double worst_cluster_sine(const ModeSet& ms, const oracle::GeneralizedEig& ref, const Eigen::VectorXd& a, double gap) {
  const Index k = ms.size();
  double worst = 0.0;
  Index start = 0;
  while (start < k) {
    Index end = start + 1;
    auto close = [&](Index j) {
      return std::abs(ref.values[j] - ref.values[j - 1]) <= gap * std::max(1.0, std::abs(ref.values[j]));
    };
    while (end < ref.values.size() && close(end)) ++end;
    const Index take = std::min(end, k) - start;
    worst = std::max(worst, oracle::subspace_sine(ms.modes.middleCols(start, take),
                                                  ref.vectors.middleCols(start, end - start), a));
    start = end;
  }
  return worst;
}

}  // namespace

TEST_CASE("zeroth potential", "[cmm][potential]") {
  const TriangleMesh m = make_tetrahedron();
  const CellAreaVector a = vertex_cell_areas(m);
  VertexFunction phi(4);
  phi << 0.5, -1.0, 0.0, 0.25;
  const Potential p = potential_from_mode(m, a, phi, L1Scheme::Zeroth, 1e-8);
  CHECK(p.v[0] == 1.0);
  CHECK(p.v[1] == 0.5);
  CHECK_THAT(p.v[2], WithinRel(5e7, 1e-15));
  CHECK(p.v[3] == 2.0);
  CHECK((p.v.array() >= 0.0).all());
  CHECK_THROWS_AS(potential_from_mode(m, a, Eigen::VectorXd::Ones(3), L1Scheme::Zeroth, 1e-8), DimensionMismatch);
}

TEST_CASE("first-order potential reproduces the IRLS coefficients", "[cmm][potential]") {
  const TriangleMesh tri = fixture::single_triangle({0, 0, 0}, {1.2, 0, 0}, {0.3, 0.9, 0});
  const CellAreaVector a = vertex_cell_areas(tri);
  VertexFunction phi(3);
  phi << 1, -1, 0;
  const Potential p = potential_from_mode(tri, a, phi, L1Scheme::First, 1e-8);
  const L1Weights w = first_order_weights(tri, phi);
  for (Index i = 0; i < 3; ++i) CHECK_THAT(p.v[i] * a[i] * phi[i], WithinAbs(0.5 * w[i], 1e-15));

  const TriangleMesh m = fixture::jittered(make_icosphere(2), 0.2, 3);
  const CellAreaVector am = vertex_cell_areas(m);
  fixture::Rng rng(4);
  const Eigen::VectorXd f = fixture::random_vector(m.n_vertices(), rng);
  const Potential pm = potential_from_mode(m, am, f, L1Scheme::First, 1e-8);
  const L1Weights wm = first_order_weights(m, f);
  for (Index i = 0; i < m.n_vertices(); ++i)
    CHECK_THAT(pm.v[i] * am[i] * f[i], WithinAbs(0.5 * wm[i], 1e-14 * am[i]));
}

TEST_CASE("support fraction", "[cmm]") {
  const CellAreaVector uniform{Eigen::VectorXd::Ones(10)};
  CHECK(support_fraction(Eigen::VectorXd::Ones(10), uniform, 1e-3) == 1.0);
  CHECK(support_fraction(Eigen::VectorXd::Unit(10, 0), uniform, 1e-3) == 0.1);
  CHECK_THROWS_AS(support_fraction(Eigen::VectorXd::Ones(10), uniform, 0.0), std::invalid_argument);
  const TriangleMesh sphere = make_icosphere(3);
  CMMOptions o;
  o.k = 4;
  const ModeSet ms = compressed_modes(sphere, o);
  for (double s : ms.support_fractions) CHECK(s > 0.95);
}

TEST_CASE("mu = 0 reproduces the harmonic basis", "[cmm][oracle]") {
  for (const TriangleMesh& m : {fixture::jittered(make_octasphere(3), 0.2, 5), make_icosphere(2),
                                fixture::jittered(make_grid(20, 20), 0.2, 6)}) {
    REQUIRE(m.n_vertices() <= 500);
    CMMOptions o;
    o.k = 10;
    o.mu = 0.0;
    const ModeSet ms = compressed_modes(m, o);
    const DiagonalMatrix a = lumped_mass(m);
    const oracle::GeneralizedEig ref = oracle::generalized_eig(Eigen::MatrixXd(cotangent_stiffness(m)), a.diagonal());
    for (Index j = 0; j < 10; ++j) {
      CHECK_THAT(ms.eigenvalues[j], WithinAbs(ref.values[j], 1e-8 * std::max(std::abs(ref.values[j]), ref.values[1])));
    }
    CHECK(worst_cluster_sine(ms, ref, a.diagonal(), 1e-6) <= 1e-6);
    const auto [off, diag] = orthonormality_errors(ms.modes, a);
    CHECK(off <= 1e-6);
    CHECK(diag <= 1e-8);
    for (const IRLSHistory& h : ms.histories) CHECK(h.size() == 1);
  }
}

TEST_CASE("mu = 0 eigenvalues scale with the mesh", "[cmm][property]") {
  const TriangleMesh m = fixture::jittered(make_octasphere(2), 0.2, 7);
  CMMOptions o;
  o.k = 6;
  const ModeSet base = compressed_modes(m, o);
  for (double s : {0.5, 3.0}) {
    const ModeSet scaled = compressed_modes(m.scaled(s), o);
    CHECK_THAT(scaled.eigenvalues[0] * s * s, WithinAbs(0.0, 1e-10 * base.eigenvalues[5]));
    for (Index j = 1; j < 6; ++j) CHECK_THAT(scaled.eigenvalues[j] * s * s, WithinRel(base.eigenvalues[j], 1e-10));
  }
}

TEST_CASE("compressed modes with mu > 0", "[cmm]") {
  const TriangleMesh sphere = make_icosphere(3);
  const DiagonalMatrix a = lumped_mass(sphere);
  CMMOptions o;
  o.k = 8;
  std::vector<double> medians;
  for (double mu : {0.0, 2.0, 20.0}) {
    o.mu = mu;
    const ModeSet ms = compressed_modes(sphere, o);
    const auto [off, diag] = orthonormality_errors(ms.modes, a);
    CHECK(off <= 1e-6);
    CHECK(diag <= 1e-8);
    for (Index j = 1; j < ms.size(); ++j) CHECK(ms.eigenvalues[j] >= ms.eigenvalues[j - 1]);
    for (const IRLSHistory& h : ms.histories) {
      CHECK(h.max_increase() <= 1e-10 * std::abs(h.records.front().objective));
      CHECK(h.size() <= static_cast<std::size_t>(o.max_irls_iters));
    }
    for (Index j = 0; j < ms.size(); ++j) {
      const Eigen::VectorXd phi = ms.mode(j);
      CHECK_THAT(ms.dirichlet_energies[j], WithinRel(phi.dot(cotangent_stiffness(sphere) * phi), 1e-12));
    }
    medians.push_back(median(ms.support_fractions));
  }
  CHECK(medians[1] <= medians[0]);
  CHECK(medians[2] < medians[0]);
  CHECK(medians[2] <= medians[1]);
}

TEST_CASE("backends agree", "[cmm]") {
  const TriangleMesh m = fixture::jittered(make_octasphere(2), 0.2, 9);
  CMMOptions o;
  o.k = 5;
  o.mu = 3.0;
  const ModeSet w = compressed_modes(m, o);
  o.backend = SolverBackend::Dense;
  const ModeSet d = compressed_modes(m, o);
  for (Index j = 0; j < 5; ++j) CHECK_THAT(d.eigenvalues[j], WithinRel(w.eigenvalues[j], 1e-6));
  o.dense_limit = 10;
  CHECK_THROWS_AS(compressed_modes(m, o), SizeLimitExceeded);
}

TEST_CASE("first-order scheme modes", "[cmm]") {
  const TriangleMesh m = fixture::jittered(make_octasphere(2), 0.2, 10);
  for (Repair repair : {Repair::Gersgorin, Repair::PsdProject}) {
    CMMOptions o;
    o.k = 3;
    o.mu = 2.0;
    o.scheme = L1Scheme::First;
    o.repair = repair;
    const ModeSet ms = compressed_modes(m, o);
    CHECK(ms.modes.allFinite());
    const auto [off, diag] = orthonormality_errors(ms.modes, lumped_mass(m));
    CHECK(off <= 1e-6);
    CHECK(diag <= 1e-8);
  }
}

TEST_CASE("compressed modes are deterministic", "[cmm][determinism]") {
  const TriangleMesh m = fixture::jittered(make_octasphere(2), 0.2, 11);
  for (bool seeded : {false, true}) {
    CMMOptions o;
    o.k = 4;
    o.mu = 2.0;
    if (seeded) o.seed = 5u;
    const ModeSet x = compressed_modes(m, o);
    const ModeSet y = compressed_modes(m, o);
    CHECK(x.modes == y.modes);
    CHECK(x.eigenvalues == y.eigenvalues);
  }
}

TEST_CASE("option validation and orthogonality guard", "[cmm]") {
  const TriangleMesh m = make_octasphere(1);
  CMMOptions o;
  o.k = 0;
  CHECK_THROWS_AS(compressed_modes(m, o), std::invalid_argument);
  o.k = 2;
  o.mu = -1.0;
  CHECK_THROWS_AS(compressed_modes(m, o), std::invalid_argument);
  o.mu = 0.0;
  o.k = 1000;
  CHECK_THROWS_AS(compressed_modes(m, o), std::invalid_argument);
  o.k = 3;
  o.beta_override = 1e-12;
  CHECK_THROWS_AS(compressed_modes(m, o), OrthogonalityLoss);
}

TEST_CASE("mode set serialization", "[cmm][io]") {
  const TriangleMesh m = make_octasphere(1);
  CMMOptions o;
  o.k = 3;
  o.mu = 1.0;
  const ModeSet ms = compressed_modes(m, o);
  std::ostringstream txt;
  write_matrix(ms.modes, txt);
  std::istringstream in(txt.str());
  CHECK(read_matrix(in) == ms.modes);

  const Json j = mode_set_json(ms, {{"command", "test"}});
  CHECK(j["format_version"] == kFormatVersion);
  CHECK(j["k"] == 3);
  CHECK(j["n_vertices"] == m.n_vertices());
  CHECK(j["eigenvalues"].size() == 3);
  CHECK(j["eigenvalues"][1].get<double>() == ms.eigenvalues[1]);
  CHECK(j["histories"].size() == 3);
  CHECK(j["options"]["mu"] == 1.0);
  CHECK(j["options"]["seed"].is_null());
  CHECK(j["config"]["command"] == "test");
  CHECK(j["support_fractions"].size() == 3);

  const auto dir = fixture::scratch_dir("cmm_io");
  save_mode_set(ms, dir);
  std::ifstream back(dir / "modes.txt");
  CHECK(read_matrix(back) == ms.modes);
  CHECK(Json::parse(std::ifstream(dir / "modes.json"))["k"] == 3);

  std::istringstream ragged("1 2\n3\n");
  CHECK_THROWS_AS(read_matrix(ragged), ParseError);
  std::istringstream junk("1 x\n");
  CHECK_THROWS_AS(read_matrix(junk), ParseError);
}
