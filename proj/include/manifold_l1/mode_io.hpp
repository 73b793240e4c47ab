#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "manifold_l1/cmm.hpp"
#include "manifold_l1/errors.hpp"

namespace manifold_l1 {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// n rows, k whitespace-separated columns, 17 significant digits.
inline void write_matrix(const Eigen::MatrixXd& m, std::ostream& out) {
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, j ? " %.17g" : "%.17g", m(i, j));
      out << buf;
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw ParseError("matrix file: malformed value on row " + std::to_string(rows.size() + 1));
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("matrix file: ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline Json to_json(const IRLSHistory& h) {
  Json records = Json::array();
  for (const IRLSRecord& r : h.records) {
    records.push_back(
        {{"iter", r.iter}, {"objective", r.objective}, {"surrogate", r.surrogate}, {"repaired", r.repaired}, {"clamped", r.clamped}});
  }
  return {{"converged", h.converged}, {"iterations", h.records.size()}, {"records", records}};
}

inline Json to_json(const CMMOptions& o) {
  Json j = {{"k", o.k},
            {"mu", o.mu},
            {"scheme", to_string(o.scheme)},
            {"repair", to_string(o.repair)},
            {"beta_override", o.beta_override ? Json(*o.beta_override) : Json(nullptr)},
            {"max_irls_iters", o.max_irls_iters},
            {"irls_rel_tol", o.irls_rel_tol},
            {"epsilon_rel", o.epsilon_rel},
            {"seed", o.seed ? Json(*o.seed) : Json(nullptr)},
            {"area_scheme", to_string(o.area_scheme)},
            {"backend", to_string(o.backend)},
            {"eigen_tol", o.eigen.tol},
            {"eigen_max_iters", o.eigen.max_iters},
            {"eigen_method", o.eigen.method == EigenMethod::Lanczos ? "lanczos" : "inverse-iteration"},
            {"dense_limit", o.dense_limit},
            {"support_tau", o.support_tau},
            {"orthonormalize", o.orthonormalize}};
  return j;
}

/// JSON sidecar of a ModeSet; `config` is the caller's resolved run config.
inline Json mode_set_json(const ModeSet& ms, const Json& config = Json::object()) {
  Json histories = Json::array();
  for (const IRLSHistory& h : ms.histories) histories.push_back(to_json(h));
  return {{"format_version", kFormatVersion},
          {"config", config},
          {"options", to_json(ms.options)},
          {"n_vertices", ms.modes.rows()},
          {"k", ms.modes.cols()},
          {"eigenvalues", std::vector<double>(ms.eigenvalues.data(), ms.eigenvalues.data() + ms.eigenvalues.size())},
          {"dirichlet_energies",
           std::vector<double>(ms.dirichlet_energies.data(), ms.dirichlet_energies.data() + ms.dirichlet_energies.size())},
          {"support_fractions", ms.support_fractions},
          {"orthogonality_error", ms.orthogonality_error},
          {"histories", histories}};
}

inline std::string dump_json(const Json& j) {
  // Numbers are written in their shortest round-trippable form.
  return j.dump(2) + "\n";
}

inline void save_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

/// Writes modes.txt and modes.json into `dir`.
inline void save_mode_set(const ModeSet& ms, const std::filesystem::path& dir, const Json& config = Json::object()) {
  std::filesystem::create_directories(dir);
  std::ostringstream txt;
  write_matrix(ms.modes, txt);
  save_text(dir / "modes.txt", txt.str());
  save_text(dir / "modes.json", dump_json(mode_set_json(ms, config)));
}

}  // namespace manifold_l1
