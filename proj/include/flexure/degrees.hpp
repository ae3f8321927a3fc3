#pragma once

#include "flexure/errors.hpp"
#include "flexure/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flexure {

/// Relative rigid-body motion of the top interface w.r.t. the fixed bottom.
enum class Degree { tx, ty, tz, rx, ry, rz };

inline constexpr std::array<Degree, 3> kDegrees2d{Degree::tx, Degree::ty, Degree::rz};
inline constexpr std::array<Degree, 6> kDegrees3d{Degree::tx, Degree::ty, Degree::tz,
                                                  Degree::rx, Degree::ry, Degree::rz};

inline std::string_view to_string(Degree d) {
  switch (d) {
  case Degree::tx: return "tx";
  case Degree::ty: return "ty";
  case Degree::tz: return "tz";
  case Degree::rx: return "rx";
  case Degree::ry: return "ry";
  case Degree::rz: return "rz";
  }
  return "?";
}

inline std::optional<Degree> parse_degree(std::string_view s) {
  for (Degree d : kDegrees3d)
    if (to_string(d) == s) return d;
  return std::nullopt;
}

inline bool valid_in_dim(Degree d, int dim) {
  return dim == 3 || d == Degree::tx || d == Degree::ty || d == Degree::rz;
}

/// How rz is prescribed in 2D.
enum class RotationConvention {
  /// u = 1, v = 1 - 2x/nelx on the top interface.
  table,
  /// Linearized rotation about the domain centroid with the same v profile.
  centered,
};

/// Prescribed displacements, full length (n); zero off the top interface.
struct PrescribedField {
  Degree degree;
  Eigen::VectorXd values;
};

/// Every displacement component of the bottom and top interface nodes.
inline std::vector<Index> interface_dofs(const Mesh& mesh) {
  std::vector<Index> out;
  for (const auto* set : {&mesh.interface_bottom(), &mesh.interface_top()})
    for (Index node : *set)
      for (int c = 0; c < mesh.dim(); ++c) out.push_back(node * mesh.dim() + c);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline PrescribedField prescribed_2d(Degree degree, const Mesh& mesh,
                                     RotationConvention rz = RotationConvention::table) {
  if (mesh.dim() != 2 || !valid_in_dim(degree, 2)) {
    throw std::invalid_argument("degree " + std::string(to_string(degree)) + " is not a 2D degree");
  }
  PrescribedField field{degree, Eigen::VectorXd::Zero(mesh.dof_count())};
  const double nelx = mesh.nelx();
  for (Index node : mesh.interface_top()) {
    const double x = mesh.node_position(node)[0];
    double u = 0.0, v = 0.0;
    switch (degree) {
    case Degree::tx: u = 1.0; break;
    case Degree::ty: v = 1.0; break;
    default:
      // rotation by -2/nelx; the table form fixes u at 1
      v = 1.0 - 2.0 * x / nelx;
      u = rz == RotationConvention::table ? 1.0 : double(mesh.nely()) / nelx;
      break;
    }
    field.values[node * 2] = u;
    field.values[node * 2 + 1] = v;
  }
  return field;
}

/// 3D: unit translations, or u = axis x (r - c) about the domain centroid.
inline PrescribedField prescribed_3d(Degree degree, const Mesh& mesh) {
  if (mesh.dim() != 3) throw std::invalid_argument("prescribed_3d needs a 3D mesh");
  PrescribedField field{degree, Eigen::VectorXd::Zero(mesh.dof_count())};
  const auto c = mesh.centroid();
  for (Index node : mesh.interface_top()) {
    const auto r = mesh.node_position(node);
    const Eigen::Vector3d arm(r[0] - c[0], r[1] - c[1], r[2] - c[2]);
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    switch (degree) {
    case Degree::tx: u = Eigen::Vector3d::UnitX(); break;
    case Degree::ty: u = Eigen::Vector3d::UnitY(); break;
    case Degree::tz: u = Eigen::Vector3d::UnitZ(); break;
    case Degree::rx: u = Eigen::Vector3d::UnitX().cross(arm); break;
    case Degree::ry: u = Eigen::Vector3d::UnitY().cross(arm); break;
    case Degree::rz: u = Eigen::Vector3d::UnitZ().cross(arm); break;
    }
    field.values.segment<3>(node * 3) = u;
  }
  return field;
}

inline PrescribedField prescribed_field(Degree degree, const Mesh& mesh,
                                        RotationConvention rz = RotationConvention::table) {
  return mesh.dim() == 2 ? prescribed_2d(degree, mesh, rz) : prescribed_3d(degree, mesh);
}

struct ProblemDegreeSets {
  std::vector<Degree> doc;
  std::vector<Degree> dof;

  /// doc followed by dof; the order used for per-degree outputs.
  std::vector<Degree> all() const {
    std::vector<Degree> out(doc);
    out.insert(out.end(), dof.begin(), dof.end());
    return out;
  }
};

/// Parses and checks DOC/DOF id lists: known ids, no duplicates, no overlap,
/// both nonempty.
inline ProblemDegreeSets validate_degree_sets(const std::vector<std::string>& doc,
                                              const std::vector<std::string>& dof, int dim = 2) {
  if (doc.empty()) throw ConfigError("at least one degree of constraint (doc) is required");
  if (dof.empty()) throw ConfigError("at least one degree of freedom (dof) is required");
  ProblemDegreeSets sets;
  auto take = [&](const std::vector<std::string>& ids, std::vector<Degree>& into, const char* what) {
    for (const auto& id : ids) {
      const auto d = parse_degree(id);
      if (!d || !valid_in_dim(*d, dim)) {
        throw ConfigError(std::string("unknown ") + what + " id '" + id + "' for a " + std::to_string(dim) +
                          "D problem");
      }
      const auto seen = sets.all();
      if (std::find(seen.begin(), seen.end(), *d) != seen.end()) {
        const bool dup = std::find(into.begin(), into.end(), *d) != into.end();
        throw ConfigError((dup ? "duplicate " + std::string(what) + " id '" : "degree '") + id +
                          (dup ? "'" : "' appears in both doc and dof"));
      }
      into.push_back(*d);
    }
  };
  take(doc, sets.doc, "doc");
  take(dof, sets.dof, "dof");
  return sets;
}

} // namespace flexure
