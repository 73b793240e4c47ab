#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "manifold_l1/errors.hpp"

namespace manifold_l1 {

using Index = Eigen::Index;
using Point = Eigen::Vector3d;
using Face = std::array<Index, 3>;

/// Piecewise-linear function sampled at mesh vertices.
using VertexFunction = Eigen::VectorXd;

namespace detail {
inline void hash_bytes(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}
}  // namespace detail

/// Immutable triangle mesh with face areas and vertex-to-face incidence.
///
/// Construction validates indices and rejects degenerate triangles (area at or
/// below 1e-12 times the squared bounding-box diagonal). Non-manifold and
/// boundary meshes are accepted.
class TriangleMesh {
 public:
  static constexpr double kDegenerateTol = 1e-12;

  TriangleMesh() = default;

  TriangleMesh(std::vector<Point> vertices, std::vector<Face> faces)
      : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    const Index n = n_vertices();
    for (std::size_t t = 0; t < faces_.size(); ++t) {
      for (Index v : faces_[t]) {
        if (v < 0 || v >= n) {
          throw IndexOutOfRange("face " + std::to_string(t) + " references vertex " + std::to_string(v) +
                                " but the mesh has " + std::to_string(n) + " vertices");
        }
      }
    }
    compute_bounding_box();
    compute_areas();
    compute_rings();
    compute_hash();
  }

  Index n_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index n_faces() const { return static_cast<Index>(faces_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Point& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Face& face(Index t) const { return faces_[static_cast<std::size_t>(t)]; }

  const Eigen::VectorXd& face_areas() const { return face_areas_; }
  double face_area(Index t) const { return face_areas_[t]; }
  double total_area() const { return total_area_; }

  /// Faces incident to vertex i, in increasing face order.
  std::span<const Index> vertex_ring(Index i) const {
    const auto b = static_cast<std::size_t>(ring_offsets_[static_cast<std::size_t>(i)]);
    const auto e = static_cast<std::size_t>(ring_offsets_[static_cast<std::size_t>(i) + 1]);
    return {ring_faces_.data() + b, e - b};
  }

  double bounding_box_diagonal() const { return bbox_diagonal_; }

  /// Mean length over unique undirected edges.
  double mean_edge_length() const {
    std::map<std::pair<Index, Index>, double> edges;
    for (const Face& f : faces_) {
      for (int k = 0; k < 3; ++k) {
        Index a = f[k], b = f[(k + 1) % 3];
        if (a > b) std::swap(a, b);
        edges.emplace(std::make_pair(a, b), (vertex(a) - vertex(b)).norm());
      }
    }
    if (edges.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [key, len] : edges) sum += len;
    return sum / static_cast<double>(edges.size());
  }

  /// Identifier of the mesh content (FNV-1a over coordinates and indices).
  std::uint64_t content_hash() const { return hash_; }

  TriangleMesh scaled(double s) const {
    std::vector<Point> v = vertices_;
    for (Point& p : v) p *= s;
    return TriangleMesh(std::move(v), faces_);
  }

 private:
  void compute_bounding_box() {
    if (vertices_.empty()) {
      bbox_diagonal_ = 0.0;
      return;
    }
    Point lo = vertices_.front(), hi = vertices_.front();
    for (const Point& p : vertices_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    bbox_diagonal_ = (hi - lo).norm();
  }

  void compute_areas() {
    face_areas_.resize(n_faces());
    total_area_ = 0.0;
    const double threshold = kDegenerateTol * bbox_diagonal_ * bbox_diagonal_;
    for (Index t = 0; t < n_faces(); ++t) {
      const Face& f = face(t);
      const double area = 0.5 * (vertex(f[1]) - vertex(f[0])).cross(vertex(f[2]) - vertex(f[0])).norm();
      if (!(area > threshold)) {
        throw DegenerateFace("face " + std::to_string(t) + " (" + std::to_string(f[0]) + ", " +
                             std::to_string(f[1]) + ", " + std::to_string(f[2]) + ") has area " +
                             std::to_string(area));
      }
      face_areas_[t] = area;
      total_area_ += area;
    }
  }

  void compute_rings() {
    const auto n = static_cast<std::size_t>(n_vertices());
    ring_offsets_.assign(n + 1, 0);
    for (const Face& f : faces_) {
      for (Index v : f) ++ring_offsets_[static_cast<std::size_t>(v) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) ring_offsets_[i + 1] += ring_offsets_[i];
    ring_faces_.assign(static_cast<std::size_t>(ring_offsets_[n]), 0);
    std::vector<Index> cursor(ring_offsets_.begin(), ring_offsets_.end() - 1);
    for (Index t = 0; t < n_faces(); ++t) {
      const Face& f = face(t);
      for (int k = 0; k < 3; ++k) {
        // A face listing the same vertex twice is degenerate and rejected above.
        ring_faces_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(f[k])]++)] = t;
      }
    }
  }

  void compute_hash() {
    std::uint64_t h = 1469598103934665603ull;
    for (const Point& p : vertices_) detail::hash_bytes(h, p.data(), 3 * sizeof(double));
    for (const Face& f : faces_) detail::hash_bytes(h, f.data(), 3 * sizeof(Index));
    hash_ = h;
  }

  std::vector<Point> vertices_;
  std::vector<Face> faces_;
  Eigen::VectorXd face_areas_;
  double total_area_ = 0.0;
  double bbox_diagonal_ = 0.0;
  std::vector<Index> ring_offsets_{0};
  std::vector<Index> ring_faces_;
  std::uint64_t hash_ = 0;
};

// ---------------------------------------------------------------------------
// Vertex cell areas

enum class CellAreaScheme { Barycentric, MixedVoronoi };

inline const char* to_string(CellAreaScheme s) {
  return s == CellAreaScheme::Barycentric ? "barycentric" : "mixed-voronoi";
}

struct CellAreaVector {
  Eigen::VectorXd areas;
  CellAreaScheme scheme = CellAreaScheme::Barycentric;

  Index size() const { return areas.size(); }
  double operator[](Index i) const { return areas[i]; }
  double sum() const { return areas.sum(); }
};

/// Per-vertex cell areas a_i.
///
/// Barycentric assigns one third of each incident face. MixedVoronoi uses the
/// circumcentric (Voronoi) split inside non-obtuse triangles and barycentric
/// thirds inside obtuse ones; each triangle's three parts are normalized to
/// its area so the cells tile the surface.
inline CellAreaVector vertex_cell_areas(const TriangleMesh& mesh,
                                        CellAreaScheme scheme = CellAreaScheme::Barycentric) {
  CellAreaVector out;
  out.scheme = scheme;
  out.areas = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (Index t = 0; t < mesh.n_faces(); ++t) {
    const Face& f = mesh.face(t);
    const double area = mesh.face_area(t);
    if (scheme == CellAreaScheme::Barycentric) {
      for (Index v : f) out.areas[v] += area / 3.0;
      continue;
    }
    std::array<double, 3> cot{};
    bool obtuse = false;
    for (int k = 0; k < 3; ++k) {
      const Point u = mesh.vertex(f[(k + 1) % 3]) - mesh.vertex(f[k]);
      const Point w = mesh.vertex(f[(k + 2) % 3]) - mesh.vertex(f[k]);
      const double d = u.dot(w);
      if (d < 0.0) obtuse = true;
      cot[k] = d / u.cross(w).norm();
    }
    if (obtuse) {
      for (Index v : f) out.areas[v] += area / 3.0;
      continue;
    }
    std::array<double, 3> part{};
    for (int k = 0; k < 3; ++k) {
      const int j = (k + 1) % 3, l = (k + 2) % 3;
      const double len_kj = (mesh.vertex(f[j]) - mesh.vertex(f[k])).squaredNorm();
      const double len_kl = (mesh.vertex(f[l]) - mesh.vertex(f[k])).squaredNorm();
      // edge kj is opposite corner l, edge kl is opposite corner j
      part[k] = (len_kj * cot[l] + len_kl * cot[j]) / 8.0;
    }
    const double scale = area / (part[0] + part[1] + part[2]);
    for (int k = 0; k < 3; ++k) out.areas[f[k]] += part[k] * scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Midpoint subdivision

/// Linear transfer of vertex functions from a coarse mesh to its midpoint
/// subdivision. Coarse vertices keep their indices in the fine mesh.
class InterpolationMap {
 public:
  InterpolationMap() = default;
  explicit InterpolationMap(Eigen::SparseMatrix<double> prolongation) : p_(std::move(prolongation)) {}

  static InterpolationMap identity(Index n) {
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    return InterpolationMap(std::move(id));
  }

  Index coarse_size() const { return p_.cols(); }
  Index fine_size() const { return p_.rows(); }
  const Eigen::SparseMatrix<double>& matrix() const { return p_; }

  VertexFunction apply(const VertexFunction& coarse) const {
    if (coarse.size() != coarse_size()) {
      throw DimensionMismatch("interpolation expects " + std::to_string(coarse_size()) + " values, got " +
                              std::to_string(coarse.size()));
    }
    return p_ * coarse;
  }

  /// Samples a fine function at the coarse vertices.
  VertexFunction restrict_to_coarse(const VertexFunction& fine) const {
    if (fine.size() != fine_size()) {
      throw DimensionMismatch("restriction expects " + std::to_string(fine_size()) + " values, got " +
                              std::to_string(fine.size()));
    }
    return fine.head(coarse_size());
  }

  /// Map for coarse -> this.fine -> next.fine.
  InterpolationMap then(const InterpolationMap& next) const {
    Eigen::SparseMatrix<double> m = next.p_ * p_;
    return InterpolationMap(std::move(m));
  }

 private:
  Eigen::SparseMatrix<double> p_;
};

struct Subdivision {
  TriangleMesh mesh;
  InterpolationMap map;
};

/// Splits every face 1 -> 4 per level with new vertices at edge midpoints
/// (shared between neighbouring faces).
inline Subdivision midpoint_subdivide(const TriangleMesh& mesh, int levels) {
  if (levels < 1) throw std::invalid_argument("midpoint_subdivide requires levels >= 1");
  std::vector<Point> verts = mesh.vertices();
  std::vector<Face> faces = mesh.faces();
  InterpolationMap total = InterpolationMap::identity(mesh.n_vertices());
  for (int level = 0; level < levels; ++level) {
    const Index n0 = static_cast<Index>(verts.size());
    std::map<std::pair<Index, Index>, Index> midpoint;
    std::vector<Eigen::Triplet<double>> trip;
    for (Index i = 0; i < n0; ++i) trip.emplace_back(i, i, 1.0);
    auto mid = [&](Index a, Index b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Index id = static_cast<Index>(verts.size());
      verts.push_back(0.5 * (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]));
      trip.emplace_back(id, a, 0.5);
      trip.emplace_back(id, b, 0.5);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const Index ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({ab, f[1], bc});
      next.push_back({ca, bc, f[2]});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
    Eigen::SparseMatrix<double> p(static_cast<Index>(verts.size()), n0);
    p.setFromTriplets(trip.begin(), trip.end());
    total = total.then(InterpolationMap(std::move(p)));
  }
  return {TriangleMesh(std::move(verts), std::move(faces)), std::move(total)};
}

// ---------------------------------------------------------------------------
// Primitive meshes

/// Regular icosahedron inscribed in the unit sphere.
inline TriangleMesh make_icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Point> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                          {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Point& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                         {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return TriangleMesh(std::move(v), std::move(f));
}

/// Regular octahedron inscribed in the unit sphere.
inline TriangleMesh make_octahedron() {
  std::vector<Point> v = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<Face> f = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return TriangleMesh(std::move(v), std::move(f));
}

/// Regular tetrahedron with unit edge length.
inline TriangleMesh make_tetrahedron() {
  const double h = 0.5 / std::sqrt(2.0);
  std::vector<Point> v = {{0.5, 0, -h}, {-0.5, 0, -h}, {0, 0.5, h}, {0, -0.5, h}};
  std::vector<Face> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return TriangleMesh(std::move(v), std::move(f));
}

/// Moves every vertex radially onto the sphere of the given radius.
inline TriangleMesh project_to_sphere(const TriangleMesh& mesh, double radius = 1.0) {
  std::vector<Point> v = mesh.vertices();
  for (Point& p : v) p = radius * p.normalized();
  return TriangleMesh(std::move(v), mesh.faces());
}

/// Icosahedron refined `level` times, each refinement projected to the sphere.
inline TriangleMesh make_icosphere(int level, double radius = 1.0) {
  TriangleMesh m = make_icosahedron();
  for (int l = 0; l < level; ++l) m = project_to_sphere(midpoint_subdivide(m, 1).mesh);
  return project_to_sphere(m, radius);
}

/// Octahedron refined `level` times, each refinement projected to the sphere.
inline TriangleMesh make_octasphere(int level, double radius = 1.0) {
  TriangleMesh m = make_octahedron();
  for (int l = 0; l < level; ++l) m = project_to_sphere(midpoint_subdivide(m, 1).mesh);
  return project_to_sphere(m, radius);
}

/// Planar (nx x ny)-vertex grid over [0,1]^2, two triangles per cell.
inline TriangleMesh make_grid(Index nx, Index ny) {
  std::vector<Point> v;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i)
      v.emplace_back(static_cast<double>(i) / static_cast<double>(nx - 1),
                     static_cast<double>(j) / static_cast<double>(ny - 1), 0.0);
  std::vector<Face> f;
  for (Index j = 0; j + 1 < ny; ++j)
    for (Index i = 0; i + 1 < nx; ++i) {
      const Index a = j * nx + i;
      f.push_back({a, a + 1, a + nx + 1});
      f.push_back({a, a + nx + 1, a + nx});
    }
  return TriangleMesh(std::move(v), std::move(f));
}

}  // namespace manifold_l1
