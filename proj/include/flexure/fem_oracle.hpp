#pragma once

// Dense reference path for strain energies. Used by tests to check the
// sparse partitioned solve; never used in the optimization loop.

#include "flexure/element.hpp"
#include "flexure/mesh.hpp"

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

namespace flexure {

inline constexpr Index kDenseOracleMaxElements = 10000;

/// 1/2 u_p^T (K_pp - K_pf K_ff^{-1} K_fp) u_p with K assembled densely.
/// `u_full` carries the prescribed values at the `prescribed` indices.
inline double condensed_energy_oracle(const Mesh& mesh, const ElementStiffness& ke, std::span<const double> fractions,
                                      std::span<const Index> prescribed, const Eigen::VectorXd& u_full) {
  if (mesh.element_count() > kDenseOracleMaxElements) {
    throw std::length_error("dense energy oracle refused: mesh exceeds test scale");
  }
  const Index n = mesh.dof_count();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto dofs = mesh.element_dof_map(e);
    for (std::size_t a = 0; a < dofs.size(); ++a)
      for (std::size_t b = 0; b < dofs.size(); ++b) k(dofs[a], dofs[b]) += fractions[e] * ke.matrix(a, b);
  }
  std::vector<bool> fixed(n, false);
  for (Index p : prescribed) fixed[p] = true;
  std::vector<Index> f, p;
  for (Index i = 0; i < n; ++i) (fixed[i] ? p : f).push_back(i);

  Eigen::VectorXd up(Index(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) up[Index(i)] = u_full[p[i]];
  if (up.isZero(0.0)) return 0.0;

  Eigen::MatrixXd kff(f.size(), f.size()), kfp(f.size(), p.size()), kpp(p.size(), p.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) kff(i, j) = k(f[i], f[j]);
    for (std::size_t j = 0; j < p.size(); ++j) kfp(i, j) = k(f[i], p[j]);
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) kpp(i, j) = k(p[i], p[j]);

  const Eigen::MatrixXd schur = kpp - kfp.transpose() * kff.ldlt().solve(kfp);
  return 0.5 * up.dot(schur * up);
}

} // namespace flexure
