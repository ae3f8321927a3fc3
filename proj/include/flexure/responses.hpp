#pragma once

#include "flexure/design_state.hpp"
#include "flexure/element.hpp"
#include "flexure/errors.hpp"
#include "flexure/fem.hpp"

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace flexure {

/// Normalized strain energy of one degree and its sensitivity.
struct EnergyResponse {
  double energy = 0.0;
  double alpha = 0.0;        // energy / reference
  Field dalpha_dphysical;    // w.r.t. the realization's physical density
  Field dalpha_dx;           // w.r.t. raw design variables
};

/// Self-adjoint energy sensitivity: dE/dphys_j = gamma_j * eps_j, where
/// eps_j is the element energy at solid modulus. No linear solve involved.
inline EnergyResponse energy_response(const DesignPipeline& pipeline, const DesignState& state, Realization r,
                                      const DegreeSolution& sol, double reference_energy) {
  if (!(reference_energy > 0.0)) {
    throw DegenerateProblemError("reference strain energy is zero; the degree does not strain the domain");
  }
  const auto& gamma = state.at(r).interp.gamma;
  EnergyResponse out;
  out.energy = sol.energy;
  out.alpha = sol.energy / reference_energy;
  out.dalpha_dphysical.resize(gamma.size());
  for (std::size_t j = 0; j < gamma.size(); ++j)
    out.dalpha_dphysical[j] = gamma[j] * sol.element_energies[j] / reference_energy;
  out.dalpha_dx = pipeline.backward(state, r, out.dalpha_dphysical);
  return out;
}

enum class ObjectiveMode { sum, smooth_min };

struct ScalarResponse {
  double value = 0.0;
  Field gradient;
};

/// f = sum_i w_i alpha_i, or the weighted harmonic mean
/// (sum w_i) / (sum w_i / alpha_i) as a smooth minimum. Returns the
/// maximized f; the optimizer minimizes -f.
inline ScalarResponse objective(std::span<const double> alphas, std::span<const Field> dalphas,
                                std::span<const double> weights = {}, ObjectiveMode mode = ObjectiveMode::sum) {
  if (alphas.empty()) throw ConfigError("objective needs at least one DOC");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  ScalarResponse out;
  const std::size_t n = dalphas.empty() ? 0 : dalphas.front().size();
  out.gradient.assign(n, 0.0);
  if (mode == ObjectiveMode::sum) {
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      out.value += w(i) * alphas[i];
      if (n)
        for (std::size_t j = 0; j < n; ++j) out.gradient[j] += w(i) * dalphas[i][j];
    }
    return out;
  }
  double wsum = 0.0, inv = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    wsum += w(i);
    inv += w(i) / alphas[i];
  }
  out.value = wsum / inv;
  for (std::size_t i = 0; i < alphas.size() && n; ++i) {
    const double c = out.value * out.value / wsum * w(i) / (alphas[i] * alphas[i]);
    for (std::size_t j = 0; j < n; ++j) out.gradient[j] += c * dalphas[i][j];
  }
  return out;
}

/// How DOF energy bounds are read.
enum class EnergyBoundMode {
  normalized, // bound on alpha_j
  raw,        // bound on E_j
};

/// g_j = alpha_j / emax_j - 1 (normalized) or E_j / emax_j - 1 (raw).
inline ScalarResponse dof_constraint(const EnergyResponse& r, double emax,
                                     EnergyBoundMode mode = EnergyBoundMode::normalized) {
  if (!(emax > 0.0)) throw ConfigError("energy bound emax must be > 0, got " + std::to_string(emax));
  // alpha = E / E0, so a raw bound rescales by E0 = E / alpha
  const double scale = mode == EnergyBoundMode::normalized ? 1.0 / emax : (r.energy / r.alpha) / emax;
  ScalarResponse out;
  out.value = r.alpha * scale - 1.0;
  out.gradient.resize(r.dalpha_dx.size());
  for (std::size_t j = 0; j < out.gradient.size(); ++j) out.gradient[j] = r.dalpha_dx[j] * scale;
  return out;
}

/// g_v = mean(phys) / vmax - 1; gradient w.r.t. the physical field.
inline ScalarResponse volume_constraint(std::span<const double> physical, double vmax) {
  if (!(vmax > 0.0 && vmax <= 1.0)) throw ConfigError("vmax must be in (0, 1]");
  const double n = double(physical.size());
  ScalarResponse out;
  out.value = std::accumulate(physical.begin(), physical.end(), 0.0) / n / vmax - 1.0;
  out.gradient.assign(physical.size(), 1.0 / (n * vmax));
  return out;
}

/// Centroid stress evaluation at solid modulus.
class StressEvaluator {
public:
  StressEvaluator(const Mesh& mesh, double nu) : mesh_(&mesh) {
    if (mesh.dim() == 2) {
      const auto b = quad_strain_matrix(0.5, 0.5);
      db_ = plane_stress_matrix(nu) * b;
      v_ = Eigen::MatrixXd::Zero(3, 3);
      v_ << 1.0, -0.5, 0.0, -0.5, 1.0, 0.0, 0.0, 0.0, 3.0;
    } else {
      const auto b = hex_strain_matrix(0.0, 0.0, 0.0);
      db_ = isotropic_matrix_3d(nu) * b;
      v_ = Eigen::MatrixXd::Zero(6, 6);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) v_(i, j) = i == j ? 1.0 : -0.5;
        v_(3 + i, 3 + i) = 3.0;
      }
    }
  }

  /// Stress components (xx, yy, xy) or (xx, yy, zz, xy, yz, zx) of element e.
  Eigen::VectorXd stress(const Vector& u, Index e) const {
    Eigen::VectorXd ue(db_.cols());
    gather(u, e, ue);
    return db_ * ue;
  }

  double von_mises(const Eigen::VectorXd& sigma) const { return std::sqrt(std::max(0.0, sigma.dot(v_ * sigma))); }

  Field von_mises_field(const Vector& u) const {
    Field out(std::size_t(mesh_->element_count()));
    for (Index e = 0; e < mesh_->element_count(); ++e) out[e] = von_mises(stress(u, e));
    return out;
  }

  /// d sigma_vm / d u_e (zero where sigma_vm vanishes).
  Eigen::VectorXd von_mises_gradient(const Eigen::VectorXd& sigma, double vm) const {
    if (vm <= 0.0) return Eigen::VectorXd::Zero(db_.cols());
    return db_.transpose() * (v_ * sigma) / vm;
  }

  void gather(const Vector& u, Index e, Eigen::VectorXd& ue) const {
    const int dim = mesh_->dim();
    int k = 0;
    for (Index node : mesh_->element_nodes(e))
      for (int c = 0; c < dim; ++c) ue[k++] = u[node * dim + c];
  }

  const Mesh& mesh() const noexcept { return *mesh_; }

private:
  const Mesh* mesh_;
  Eigen::MatrixXd db_, v_;
};

/// Per-element von Mises stress at element centroids (solid modulus).
inline Field von_mises(const Mesh& mesh, const Vector& u, double nu) {
  return StressEvaluator(mesh, nu).von_mises_field(u);
}

struct StressSettings {
  double sigma_bar = 1.0;
  double aggregation = 10.0; // P in the p-mean
  double relaxation = 0.5;   // q in phys^q
};

struct StressResponse {
  double value = 0.0; // g = c * pmean(s) - 1
  double pmean = 0.0;
  double max_relaxed_stress = 0.0; // max_j phys_j^q sigma_vm_j
  Field von_mises;
  Field gradient_physical;
};

/// Relaxed, p-mean aggregated stress constraint of one DOF load case with
/// its adjoint sensitivity w.r.t. the physical density of the realization
/// the system was assembled with. `normalization` is the (frozen) adaptive
/// factor c that maps the p-mean onto the maximum.
inline StressResponse stress_constraint(GlobalSystem& system, const DegreeSolution& sol,
                                        const DesignState::Layer& layer, const StressSettings& cfg,
                                        double normalization = 1.0) {
  if (!(cfg.aggregation >= 1.0)) throw ConfigError("stress aggregation exponent must be >= 1");
  if (!(cfg.sigma_bar > 0.0)) throw ConfigError("allowable stress must be > 0");
  const Mesh& mesh = system.mesh();
  const StressEvaluator eval(mesh, system.element_stiffness().poisson);
  const Index ne = mesh.element_count();
  const double P = cfg.aggregation, q = cfg.relaxation;
  constexpr double kDensityFloor = 1e-12;

  StressResponse out;
  out.von_mises.resize(std::size_t(ne));
  std::vector<Eigen::VectorXd> sigma(static_cast<std::size_t>(ne));
  Field rho(static_cast<std::size_t>(ne)), s(static_cast<std::size_t>(ne));
  double sum = 0.0;
  for (Index e = 0; e < ne; ++e) {
    sigma[e] = eval.stress(sol.u, e);
    out.von_mises[e] = eval.von_mises(sigma[e]);
    rho[e] = std::max(layer.physical[e], kDensityFloor);
    s[e] = std::pow(rho[e], q) * out.von_mises[e] / cfg.sigma_bar;
    out.max_relaxed_stress = std::max(out.max_relaxed_stress, s[e] * cfg.sigma_bar);
    sum += std::pow(s[e], P);
  }
  out.pmean = std::pow(sum / double(ne), 1.0 / P);
  out.value = normalization * out.pmean - 1.0;

  out.gradient_physical.assign(std::size_t(ne), 0.0);
  if (out.pmean <= 0.0) return out;

  // dG/ds_j = c * pmean^(1-P) * s_j^(P-1) / N
  const double lead = normalization * std::pow(out.pmean, 1.0 - P) / double(ne);
  Vector dgdu = Vector::Zero(mesh.dof_count());
  const int dim = mesh.dim();
  for (Index e = 0; e < ne; ++e) {
    if (s[e] <= 0.0) continue;
    const double dgds = lead * std::pow(s[e], P - 1.0);
    if (layer.physical[e] > kDensityFloor)
      out.gradient_physical[e] += dgds * q * std::pow(rho[e], q - 1.0) * out.von_mises[e] / cfg.sigma_bar;
    const Eigen::VectorXd dvm = eval.von_mises_gradient(sigma[e], out.von_mises[e]);
    const double scale = dgds * std::pow(rho[e], q) / cfg.sigma_bar;
    int k = 0;
    for (Index node : mesh.element_nodes(e))
      for (int c = 0; c < dim; ++c) dgdu[node * dim + c] += scale * dvm[k++];
  }

  Vector rhs(Index(system.free_dofs().size()));
  for (std::size_t i = 0; i < system.free_dofs().size(); ++i) rhs[Index(i)] = dgdu[system.free_dofs()[i]];
  const Vector lambda_f = system.solve_adjoint(rhs);
  Vector lambda = Vector::Zero(mesh.dof_count());
  for (std::size_t i = 0; i < system.free_dofs().size(); ++i) lambda[system.free_dofs()[i]] = lambda_f[Index(i)];

  const auto& ke = system.element_stiffness().matrix;
  Eigen::VectorXd le(ke.rows()), ue(ke.rows());
  for (Index e = 0; e < ne; ++e) {
    system.gather(lambda, e, le);
    system.gather(sol.u, e, ue);
    out.gradient_physical[e] -= layer.interp.gamma[e] * le.dot(ke * ue);
  }
  return out;
}

/// Mean of 4 x (1 - x): 0 for a binary field, 1 for uniform gray.
inline double measure_non_discreteness(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += 4.0 * v * (1.0 - v);
  return acc / double(x.size());
}

} // namespace flexure
