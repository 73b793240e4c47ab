#pragma once

// Command implementations behind the manifold_l1 executable. Kept separate
// from argument parsing so tests can drive them directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "manifold_l1/manifold_l1.hpp"

namespace manifold_l1::cli {

namespace fs = std::filesystem;

/// Mesh argument: a path to an OFF/OBJ file, or a built-in generator
/// "builtin:icosahedron", "builtin:octahedron", "builtin:tetrahedron",
/// "builtin:icosphere:<level>", "builtin:octasphere:<level>",
/// "builtin:grid:<nx>x<ny>".
inline TriangleMesh load_mesh_arg(const std::string& spec) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) != 0) return load_mesh(spec);
  const std::string rest = spec.substr(prefix.size());
  const auto colon = rest.find(':');
  const std::string name = rest.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : rest.substr(colon + 1);
  auto level = [&]() {
    try {
      return std::stoi(arg);
    } catch (const std::exception&) {
      throw ParseError("built-in mesh '" + spec + "' needs an integer level");
    }
  };
  if (name == "icosahedron") return make_icosahedron();
  if (name == "octahedron") return make_octahedron();
  if (name == "tetrahedron") return make_tetrahedron();
  if (name == "icosphere") return make_icosphere(level());
  if (name == "octasphere") return make_octasphere(level());
  if (name == "grid") {
    const auto x = arg.find('x');
    if (x == std::string::npos) throw ParseError("grid mesh needs <nx>x<ny>");
    return make_grid(std::stol(arg.substr(0, x)), std::stol(arg.substr(x + 1)));
  }
  throw ParseError("unknown built-in mesh '" + name + "'");
}

inline L1Scheme parse_scheme(const std::string& s) {
  if (s == "zeroth") return L1Scheme::Zeroth;
  if (s == "first") return L1Scheme::First;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

inline CellAreaScheme parse_area_scheme(const std::string& s) {
  if (s == "barycentric") return CellAreaScheme::Barycentric;
  if (s == "mixed-voronoi") return CellAreaScheme::MixedVoronoi;
  throw std::invalid_argument("unknown area scheme '" + s + "'");
}

inline Repair parse_repair(const std::string& s) {
  if (s == "gersgorin") return Repair::Gersgorin;
  if (s == "psd-project") return Repair::PsdProject;
  if (s == "none") return Repair::None;
  throw std::invalid_argument("unknown repair '" + s + "'");
}

inline ConvergenceMode parse_convergence_mode(const std::string& s) {
  if (s == "per-level") return ConvergenceMode::PerLevel;
  if (s == "finest-sampled") return ConvergenceMode::FinestSampled;
  if (s == "constant") return ConvergenceMode::Constant;
  throw std::invalid_argument("unknown convergence mode '" + s + "'");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct NormConfig {
  std::string mesh;
  std::string function;
  std::string scheme = "first";  // naive | zeroth | first | oracle
  std::string area_scheme = "barycentric";
  int quad_points = 3000;
};

inline Json to_json(const NormConfig& c) {
  return {{"command", "norm"},     {"mesh", c.mesh},           {"function", c.function}, {"scheme", c.scheme},
          {"area_scheme", c.area_scheme}, {"quad_points", c.quad_points}, {"threads", num_threads()}};
}

inline double evaluate_norm(const NormConfig& c) {
  const TriangleMesh mesh = load_mesh_arg(c.mesh);
  const VertexFunction f = load_vertex_function(c.function);
  if (f.size() != mesh.n_vertices()) {
    throw DimensionMismatch("function file has " + std::to_string(f.size()) + " values, mesh has " +
                            std::to_string(mesh.n_vertices()) + " vertices");
  }
  if (c.scheme == "naive") return norm_naive(f);
  if (c.scheme == "zeroth") return norm_zeroth(f, vertex_cell_areas(mesh, parse_area_scheme(c.area_scheme)));
  if (c.scheme == "first") return norm_first(mesh, f);
  if (c.scheme == "oracle") return quadrature_oracle_norm(mesh, f, c.quad_points);
  throw std::invalid_argument("unknown norm scheme '" + c.scheme + "'");
}

/// Prints {"format_version", "scheme", "value", "config"}; the value carries
/// 17 significant digits.
inline void cmd_norm(const NormConfig& c, std::ostream& out) {
  const double value = evaluate_norm(c);
  out << "{\"format_version\": " << kFormatVersion << ", \"scheme\": " << Json(c.scheme).dump()
      << ", \"value\": " << format_double(value) << ", \"config\": " << to_json(c).dump() << "}\n";
}

// ---------------------------------------------------------------------------

struct ModesConfig {
  std::string mesh;
  std::string output = "modes_out";
  int k = 8;
  double mu = 0.0;
  bool area_normalized_mu = false;
  std::string scheme = "zeroth";
  std::string repair = "gersgorin";
  std::string area_scheme = "barycentric";
  std::string backend = "woodbury";
  std::optional<unsigned> seed;
  std::optional<double> beta;
  int max_irls_iters = 30;
  double irls_rel_tol = 1e-6;
  double epsilon_rel = 1e-8;
  Index dense_limit = 2000;
  bool write_ply = true;
};

inline CMMOptions resolve(const ModesConfig& c, const TriangleMesh& mesh) {
  CMMOptions o;
  o.k = c.k;
  o.mu = c.area_normalized_mu ? c.mu * mesh.total_area() : c.mu;
  o.scheme = parse_scheme(c.scheme);
  o.repair = parse_repair(c.repair);
  o.area_scheme = parse_area_scheme(c.area_scheme);
  if (c.backend == "woodbury")
    o.backend = SolverBackend::Woodbury;
  else if (c.backend == "dense")
    o.backend = SolverBackend::Dense;
  else
    throw std::invalid_argument("unknown backend '" + c.backend + "'");
  o.seed = c.seed;
  o.beta_override = c.beta;
  o.max_irls_iters = c.max_irls_iters;
  o.irls_rel_tol = c.irls_rel_tol;
  o.epsilon_rel = c.epsilon_rel;
  o.dense_limit = c.dense_limit;
  return o;
}

inline Json to_json(const ModesConfig& c, const CMMOptions& resolved) {
  return {{"command", "modes"},
          {"mesh", c.mesh},
          {"output", c.output},
          {"k", c.k},
          {"mu", c.mu},
          {"area_normalized_mu", c.area_normalized_mu},
          {"mu_effective", resolved.mu},
          {"scheme", c.scheme},
          {"repair", c.repair},
          {"area_scheme", c.area_scheme},
          {"backend", c.backend},
          {"seed", c.seed ? Json(*c.seed) : Json(nullptr)},
          {"beta", c.beta ? Json(*c.beta) : Json(nullptr)},
          {"max_irls_iters", c.max_irls_iters},
          {"irls_rel_tol", c.irls_rel_tol},
          {"epsilon_rel", c.epsilon_rel},
          {"dense_limit", c.dense_limit},
          {"threads", num_threads()}};
}

inline std::string mode_file_name(int j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mode_%03d.ply", j);
  return buf;
}

/// Writes modes.txt, modes.json and mode_001.ply ... mode_k.ply into the
/// output directory. Returns the computed set.
inline ModeSet cmd_modes(const ModesConfig& c, std::ostream& log) {
  const TriangleMesh mesh = load_mesh_arg(c.mesh);
  const CMMOptions opts = resolve(c, mesh);
  const ModeSet ms = compressed_modes(mesh, opts);
  const fs::path dir(c.output);
  save_mode_set(ms, dir, to_json(c, opts));
  if (c.write_ply) {
    for (Index j = 0; j < ms.size(); ++j) save_ply(mesh, ms.mode(j), dir / mode_file_name(static_cast<int>(j) + 1));
  }
  log << "wrote " << ms.size() << " modes for " << mesh.n_vertices() << " vertices to " << dir.string() << "\n";
  return ms;
}

// ---------------------------------------------------------------------------

struct ConvergenceConfig {
  std::string mesh;
  std::string output = "report.json";
  int levels = 4;
  int num_eigs = 200;
  int first_level = 1;
  std::string mode = "per-level";
  std::string area_scheme = "barycentric";
  Index dense_limit = 2000;
  std::string csv;
};

inline Json report_json(const ConvergenceReport& r, const ConvergenceConfig& c) {
  Json rows = Json::array();
  for (const LevelReport& l : r.levels) {
    rows.push_back({{"level", l.level},
                    {"n_vertices", l.n_vertices},
                    {"n_faces", l.n_faces},
                    {"mean_edge_length", l.mean_edge_length},
                    {"num_functions", l.num_functions},
                    {"error_naive", l.err_naive},
                    {"error_zeroth", l.err_zeroth},
                    {"error_first", l.err_first}});
  }
  const Json config = {{"command", "convergence"},  {"mesh", c.mesh},          {"output", c.output},
                       {"levels", c.levels},         {"num_eigs", c.num_eigs},  {"first_level", c.first_level},
                       {"mode", c.mode},             {"area_scheme", c.area_scheme}, {"dense_limit", c.dense_limit},
                       {"threads", num_threads()}};
  return {{"format_version", kFormatVersion},
          {"config", config},
          {"reference", "first-order norm on the finest subdivision level of each function transferred there"},
          {"error", "mean over functions of |norm(f) - reference| / reference"},
          {"levels", rows}};
}

inline ConvergenceReport cmd_convergence(const ConvergenceConfig& c, std::ostream& log) {
  const TriangleMesh mesh = load_mesh_arg(c.mesh);
  ConvergenceOptions o;
  o.levels = c.levels;
  o.num_eigs = c.num_eigs;
  o.first_level = c.first_level;
  o.mode = parse_convergence_mode(c.mode);
  o.area_scheme = parse_area_scheme(c.area_scheme);
  o.dense_limit = c.dense_limit;
  const ConvergenceReport r = convergence_study(mesh, o);
  save_text(c.output, dump_json(report_json(r, c)));
  if (!c.csv.empty()) {
    std::ostringstream csv;
    csv << "level,n_vertices,n_faces,mean_edge_length,error_naive,error_zeroth,error_first\n";
    for (const LevelReport& l : r.levels) {
      csv << l.level << ',' << l.n_vertices << ',' << l.n_faces << ',' << format_double(l.mean_edge_length) << ','
          << format_double(l.err_naive) << ',' << format_double(l.err_zeroth) << ',' << format_double(l.err_first)
          << '\n';
    }
    save_text(c.csv, csv.str());
  }
  log << "level  n      h          naive      zeroth     first\n";
  for (const LevelReport& l : r.levels) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6d %-6lld %-10.4g %-10.4g %-10.4g %-10.4g\n", l.level,
                  static_cast<long long>(l.n_vertices), l.mean_edge_length, l.err_naive, l.err_zeroth, l.err_first);
    log << buf;
  }
  return r;
}

// ---------------------------------------------------------------------------

struct BenchConfig {
  std::vector<std::string> meshes;
  std::vector<int> ks{8};
  double mu = 0.0;
  std::string scheme = "zeroth";
  int repeats = 10;
  Index dense_limit = 2000;
  std::string output = "bench.json";
  std::vector<std::string> backends{"woodbury", "dense"};
};

struct BenchCell {
  std::string mesh;
  Index n_vertices = 0;
  int k = 0;
  std::string backend;
  std::vector<double> seconds;
  std::string skipped;  // reason, empty if run
  double mean() const {
    return seconds.empty() ? 0.0 : std::accumulate(seconds.begin(), seconds.end(), 0.0) / seconds.size();
  }
  double stddev() const {
    if (seconds.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double x : seconds) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(seconds.size() - 1));
  }
};

inline std::vector<BenchCell> cmd_bench(const BenchConfig& c, std::ostream& log) {
  if (c.repeats < 1) throw std::invalid_argument("--repeats must be >= 1");
  std::vector<BenchCell> cells;
  for (const std::string& spec : c.meshes) {
    const TriangleMesh mesh = load_mesh_arg(spec);
    for (int k : c.ks) {
      for (const std::string& backend : c.backends) {
        BenchCell cell;
        cell.mesh = spec;
        cell.n_vertices = mesh.n_vertices();
        cell.k = k;
        cell.backend = backend;
        CMMOptions o;
        o.k = k;
        o.mu = c.mu;
        o.scheme = parse_scheme(c.scheme);
        o.dense_limit = c.dense_limit;
        o.backend = backend == "dense" ? SolverBackend::Dense : SolverBackend::Woodbury;
        if (backend != "dense" && backend != "woodbury") throw std::invalid_argument("unknown backend '" + backend + "'");
        try {
          for (int r = 0; r < c.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const ModeSet ms = compressed_modes(mesh, o);
            const auto t1 = std::chrono::steady_clock::now();
            cell.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
          }
        } catch (const SizeLimitExceeded& e) {
          cell.seconds.clear();
          cell.skipped = e.what();
        }
        char buf[200];
        if (cell.skipped.empty()) {
          std::snprintf(buf, sizeof buf, "%-28s n=%-7lld k=%-3d %-9s %.4f +- %.4f s\n", spec.c_str(),
                        static_cast<long long>(cell.n_vertices), k, backend.c_str(), cell.mean(), cell.stddev());
        } else {
          std::snprintf(buf, sizeof buf, "%-28s n=%-7lld k=%-3d %-9s skipped (size limit)\n", spec.c_str(),
                        static_cast<long long>(cell.n_vertices), k, backend.c_str());
        }
        log << buf;
        cells.push_back(std::move(cell));
      }
    }
  }

  Json rows = Json::array();
  for (const BenchCell& cell : cells) {
    Json row = {{"mesh", cell.mesh},       {"n_vertices", cell.n_vertices}, {"k", cell.k},
                {"backend", cell.backend}, {"repeats", cell.seconds.size()}};
    if (cell.skipped.empty()) {
      row["mean_seconds"] = cell.mean();
      row["std_seconds"] = cell.stddev();
      row["samples"] = cell.seconds;
    } else {
      row["skipped"] = cell.skipped;
    }
    rows.push_back(row);
  }
  const Json config = {{"command", "bench"},  {"meshes", c.meshes},   {"k", c.ks},
                       {"mu", c.mu},          {"scheme", c.scheme},   {"repeats", c.repeats},
                       {"dense_limit", c.dense_limit}, {"backends", c.backends}, {"output", c.output},
                       {"threads", num_threads()}};
  save_text(c.output, dump_json({{"format_version", kFormatVersion}, {"config", config}, {"results", rows}}));
  return cells;
}

// ---------------------------------------------------------------------------

struct ExportConfig {
  std::string mesh;
  std::string function;
  std::string output = "out.ply";
};

inline void cmd_export_ply(const ExportConfig& c, std::ostream& log) {
  const TriangleMesh mesh = load_mesh_arg(c.mesh);
  const VertexFunction f = load_vertex_function(c.function);
  save_ply(mesh, f, c.output);
  log << "wrote " << c.output << " (" << mesh.n_vertices() << " vertices, " << mesh.n_faces() << " faces)\n";
}

}  // namespace manifold_l1::cli
