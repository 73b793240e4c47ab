#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "manifold_l1/errors.hpp"
#include "manifold_l1/mesh.hpp"

namespace manifold_l1 {

enum class MeshFormat { Auto, OFF, OBJ };

namespace detail {

inline std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

/// Next non-empty, comment-stripped line.
inline bool next_content_line(std::istream& in, std::string& out) {
  std::string line;
  while (std::getline(in, line)) {
    line = strip_comment(line);
    if (!blank(line)) {
      out = line;
      return true;
    }
  }
  return false;
}

/// Anchored at the first polygon vertex.
inline void fan_triangulate(const std::vector<Index>& poly, std::vector<Face>& faces) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
}

}  // namespace detail

inline TriangleMesh parse_off(std::istream& in) {
  std::string line;
  if (!detail::next_content_line(in, line)) throw ParseError("OFF: empty input");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw ParseError("OFF: missing 'OFF' header");
  long long nv = -1, nf = -1, ne = 0;
  // Counts may follow the header on the same line.
  if (!(header >> nv)) {
    if (!detail::next_content_line(in, line)) throw ParseError("OFF: missing counts line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw ParseError("OFF: malformed counts line");
    counts >> ne;
  } else if (!(header >> nf)) {
    throw ParseError("OFF: malformed counts line");
  }
  if (nv < 0 || nf < 0) throw ParseError("OFF: negative element counts");

  std::vector<Point> verts;
  verts.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i) {
    if (!detail::next_content_line(in, line)) {
      throw ParseError("OFF: expected " + std::to_string(nv) + " vertices, found " + std::to_string(i));
    }
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw ParseError("OFF: malformed vertex line " + std::to_string(i));
    verts.emplace_back(x, y, z);
  }
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long long i = 0; i < nf; ++i) {
    if (!detail::next_content_line(in, line)) {
      throw ParseError("OFF: expected " + std::to_string(nf) + " faces, found " + std::to_string(i));
    }
    std::istringstream ls(line);
    long long count;
    if (!(ls >> count) || count < 3) throw ParseError("OFF: malformed face line " + std::to_string(i));
    std::vector<Index> poly(static_cast<std::size_t>(count));
    for (auto& v : poly) {
      long long idx;
      if (!(ls >> idx)) throw ParseError("OFF: face line " + std::to_string(i) + " has too few indices");
      v = static_cast<Index>(idx);
    }
    detail::fan_triangulate(poly, faces);
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

inline TriangleMesh parse_obj(std::istream& in) {
  std::vector<Point> verts;
  std::vector<Face> faces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_comment(line);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ParseError("OBJ: malformed vertex on line " + std::to_string(line_no));
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<Index> poly;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/t", "i//n", "i/t/n": only the position index is used.
        const std::string head = tok.substr(0, tok.find('/'));
        long long idx;
        try {
          std::size_t used = 0;
          idx = std::stoll(head, &used);
          if (used != head.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ParseError("OBJ: malformed face index '" + tok + "' on line " + std::to_string(line_no));
        }
        if (idx <= 0) {
          throw ParseError("OBJ: non-positive face index " + std::to_string(idx) + " on line " +
                           std::to_string(line_no) + " (relative indices are unsupported)");
        }
        poly.push_back(static_cast<Index>(idx - 1));
      }
      if (poly.size() < 3) throw ParseError("OBJ: face with fewer than 3 vertices on line " + std::to_string(line_no));
      detail::fan_triangulate(poly, faces);
    }
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

inline MeshFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".off") return MeshFormat::OFF;
  if (ext == ".obj") return MeshFormat::OBJ;
  throw ParseError("cannot infer mesh format from extension '" + ext + "'");
}

inline TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format = MeshFormat::Auto) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file " + path.string());
  if (format == MeshFormat::Auto) format = format_from_extension(path);
  return format == MeshFormat::OFF ? parse_off(in) : parse_obj(in);
}

inline void write_off(const TriangleMesh& mesh, std::ostream& out) {
  out << "OFF\n" << mesh.n_vertices() << ' ' << mesh.n_faces() << " 0\n";
  out << std::setprecision(17);
  for (const Point& p : mesh.vertices()) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void save_off(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_off(mesh, out);
}

// ---------------------------------------------------------------------------
// Vertex function column files: one value per line.

inline VertexFunction read_vertex_function(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_comment(line);
    if (detail::blank(line)) continue;
    std::istringstream ls(line);
    double v;
    std::string extra;
    if (!(ls >> v) || (ls >> extra)) throw ParseError("function file: malformed value on line " + std::to_string(line_no));
    if (!std::isfinite(v)) throw ParseError("function file: non-finite value on line " + std::to_string(line_no));
    values.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

inline VertexFunction load_vertex_function(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open function file " + path.string());
  return read_vertex_function(in);
}

inline void write_vertex_function(const VertexFunction& f, std::ostream& out) {
  char buf[64];
  for (Index i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", f[i]);
    out << buf;
  }
}

inline void save_vertex_function(const VertexFunction& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_vertex_function(f, out);
}

/// "i j value" per stored entry, 0-based.
inline void write_triplets(const Eigen::SparseMatrix<double>& m, std::ostream& out) {
  char buf[96];
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value());
      out << buf;
    }
  }
}

// ---------------------------------------------------------------------------
// PLY export

namespace detail {
template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}
}  // namespace detail

/// Binary little-endian PLY with float x, y, z, quality per vertex and an
/// (uchar, int) vertex_indices list per face.
inline void write_ply(const TriangleMesh& mesh, const VertexFunction& quality, std::ostream& out) {
  if (quality.size() != mesh.n_vertices()) {
    throw DimensionMismatch("PLY export: " + std::to_string(quality.size()) + " values for " +
                            std::to_string(mesh.n_vertices()) + " vertices");
  }
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << mesh.n_vertices() << "\n"
      << "property float x\nproperty float y\nproperty float z\nproperty float quality\n"
      << "element face " << mesh.n_faces() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    const Point& p = mesh.vertex(i);
    detail::put_le(out, static_cast<float>(p.x()));
    detail::put_le(out, static_cast<float>(p.y()));
    detail::put_le(out, static_cast<float>(p.z()));
    detail::put_le(out, static_cast<float>(quality[i]));
  }
  for (const Face& f : mesh.faces()) {
    detail::put_le(out, static_cast<unsigned char>(3));
    for (Index v : f) detail::put_le(out, static_cast<std::int32_t>(v));
  }
}

inline void save_ply(const TriangleMesh& mesh, const VertexFunction& quality, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_ply(mesh, quality, out);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace manifold_l1
