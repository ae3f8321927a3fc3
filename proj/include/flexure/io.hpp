#pragma once

// File outputs: density images/tables, iteration log, run report.

#include "flexure/driver.hpp"
#include "flexure/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexure {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DensityFormat { pgm, csv, vtk };

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string fmt(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

} // namespace detail

/// 8-bit gray level of a density: 255 (1 - x) rounded half-up, solid = black.
inline unsigned char density_gray(double x) {
  const double v = 255.0 * (1.0 - std::clamp(x, 0.0, 1.0));
  return static_cast<unsigned char>(std::floor(v + 0.5));
}

/// 2D: binary PGM (P5) or CSV, top row first. 3D: legacy VTK structured
/// points with one cell scalar per element.
inline void export_density(const Mesh& mesh, std::span<const double> x, const std::filesystem::path& path,
                           DensityFormat format) {
  if (Index(x.size()) != mesh.element_count()) throw std::invalid_argument("export_density: field length mismatch");
  const int nx = mesh.nelx(), ny = mesh.nely();
  switch (format) {
  case DensityFormat::pgm: {
    if (mesh.dim() != 2) throw std::invalid_argument("PGM export is 2D only");
    auto out = detail::open_out(path, true);
    out << "P5\n" << nx << " " << ny << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(nx));
    for (int ey = ny - 1; ey >= 0; --ey) {
      for (int ex = 0; ex < nx; ++ex) row[std::size_t(ex)] = density_gray(x[mesh.element_index(ex, ey)]);
      out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    detail::finish(out, path);
    break;
  }
  case DensityFormat::csv: {
    if (mesh.dim() != 2) throw std::invalid_argument("CSV export is 2D only");
    auto out = detail::open_out(path);
    for (int ey = ny - 1; ey >= 0; --ey) {
      for (int ex = 0; ex < nx; ++ex) out << (ex ? "," : "") << detail::fmt(x[mesh.element_index(ex, ey)]);
      out << "\n";
    }
    detail::finish(out, path);
    break;
  }
  case DensityFormat::vtk: {
    if (mesh.dim() != 3) throw std::invalid_argument("VTK export is 3D only");
    auto out = detail::open_out(path);
    out << "# vtk DataFile Version 3.0\nflexure density\nASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << nx + 1 << " " << ny + 1 << " " << mesh.nelz() + 1 << "\n";
    out << "ORIGIN 0 0 0\nSPACING 1 1 1\n";
    out << "CELL_DATA " << mesh.element_count() << "\nSCALARS density double 1\nLOOKUP_TABLE default\n";
    for (int ez = 0; ez < mesh.nelz(); ++ez)
      for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex) out << detail::fmt(x[mesh.element_index(ex, ey, ez)]) << "\n";
    detail::finish(out, path);
    break;
  }
  }
}

/// Reads a 2D density CSV written by export_density.
inline Field read_density_csv(const Mesh& mesh, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Field x(std::size_t(mesh.element_count()));
  std::string line;
  for (int ey = mesh.nely() - 1; ey >= 0; --ey) {
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "': too few rows");
    std::stringstream ss(line);
    std::string cell;
    for (int ex = 0; ex < mesh.nelx(); ++ex) {
      if (!std::getline(ss, cell, ',')) throw IoError("'" + path.string() + "': too few columns");
      x[mesh.element_index(ex, ey)] = std::stod(cell);
    }
  }
  return x;
}

/// CSV with header k,f,g_1..g_m,change,kkt,E_1..E_d; one row per iteration.
inline void write_log(const RunResult& result, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  const std::size_t m = result.log.empty() ? 0 : result.log.front().g.size();
  out << "k,f";
  for (std::size_t i = 1; i <= m; ++i) out << ",g_" << i;
  out << ",change,kkt";
  for (std::size_t i = 1; i <= result.degree_ids.size(); ++i) out << ",E_" << i;
  out << "\n";
  for (const auto& row : result.log) {
    out << row.k << "," << detail::fmt(row.f, 12);
    for (double g : row.g) out << "," << detail::fmt(g, 12);
    out << "," << detail::fmt(row.change, 12) << "," << detail::fmt(row.kkt, 12);
    for (double e : row.energies) out << "," << detail::fmt(e, 12);
    out << "\n";
  }
  detail::finish(out, path);
}

inline nlohmann::json report_json(const RunResult& r) {
  nlohmann::json j;
  j["mesh"] = {{"nelx", r.nelx}, {"nely", r.nely}, {"nelz", r.nelz}};
  j["mode"] = to_string(r.plan.mode);
  j["degrees"] = r.degree_ids;
  j["doc"] = std::vector<std::string>(r.degree_ids.begin(), r.degree_ids.begin() + long(r.doc_count));
  j["dof"] = std::vector<std::string>(r.degree_ids.begin() + long(r.doc_count), r.degree_ids.end());
  j["iterations"] = r.log.size();
  j["termination"] = {{"converged", r.termination.converged},
                      {"reason", to_string(r.termination.reason)},
                      {"change", r.termination.change},
                      {"kkt_norm", r.termination.kkt_norm},
                      {"feasible", r.termination.feasible}};
  if (!r.log.empty()) {
    const auto& last = r.log.back();
    j["objective"] = last.f;
    j["constraints"] = last.g;
    nlohmann::json energies, alphas, refs;
    for (std::size_t i = 0; i < r.degree_ids.size(); ++i) {
      energies[r.degree_ids[i]] = last.energies[i];
      alphas[r.degree_ids[i]] = last.alphas[i];
      refs[r.degree_ids[i]] = r.reference_energies[i];
    }
    j["energies"] = energies;
    j["alphas"] = alphas;
    j["reference_energies"] = refs;
  }
  nlohmann::json vm = nlohmann::json::object();
  for (std::size_t i = 0; i < r.max_relaxed_von_mises.size(); ++i)
    vm[r.degree_ids[r.doc_count + i]] = r.max_relaxed_von_mises[i];
  j["max_relaxed_von_mises"] = vm;
  j["stress_relaxation"] = r.stress_relaxation;
  if (r.plan.stress) j["sigma_bar"] = r.plan.sigma_bar;
  j["non_discreteness"] = r.non_discreteness;
  if (!r.realization_energies.empty()) {
    const char* names[] = {"eroded", "intermediate", "dilated"};
    for (std::size_t v = 0; v < 3; ++v) {
      nlohmann::json e;
      for (std::size_t i = 0; i < r.degree_ids.size(); ++i) e[r.degree_ids[i]] = r.realization_energies[v][i];
      j["realization_energies"][names[v]] = e;
    }
  }
  nlohmann::json effort = nlohmann::json::array();
  for (const auto& row : r.log)
    effort.push_back({row.effort.factorizations, row.effort.substitutions, row.effort.adjoint_substitutions});
  j["effort_per_iteration"] = effort;
  return j;
}

inline void write_report(const RunResult& r, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << report_json(r).dump(2) << "\n";
  detail::finish(out, path);
}

/// Writes design files, log and report into `dir`.
inline void export_run(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Mesh mesh(r.nelx, r.nely, r.nelz ? std::optional<int>(r.nelz) : std::nullopt);
  if (mesh.dim() == 2) {
    export_density(mesh, r.nominal, dir / "design.pgm", DensityFormat::pgm);
    export_density(mesh, r.nominal, dir / "design.csv", DensityFormat::csv);
    if (r.plan.project) {
      export_density(mesh, r.design.at(Realization::eroded).physical, dir / "design_eroded.csv", DensityFormat::csv);
      export_density(mesh, r.design.at(Realization::dilated).physical, dir / "design_dilated.csv", DensityFormat::csv);
    }
  } else {
    export_density(mesh, r.nominal, dir / "design.vtk", DensityFormat::vtk);
  }
  write_log(r, dir / "log.csv");
  write_report(r, dir / "report.json");
}

} // namespace flexure
