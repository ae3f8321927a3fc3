#pragma once

#include "flexure/element.hpp"
#include "flexure/errors.hpp"
#include "flexure/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexure {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

/// Solver seam for K_ff. Implementations must be pure functions of the
/// matrix they were last factorized with.
class LinearSolver {
public:
  virtual ~LinearSolver() = default;
  virtual void analyze(const SparseMatrix& a) = 0;
  /// Numeric factorization; throws SingularSystemError with the local
  /// (row of `a`) index of the failed pivot.
  virtual void factorize(const SparseMatrix& a) = 0;
  virtual Vector solve(const Vector& rhs) const = 0;
};

/// Sparse LDL^T with AMD ordering. A pivot that is non-positive or smaller
/// than `relative_pivot_tol` times the largest pivot is reported as singular.
class SparseCholeskySolver final : public LinearSolver {
public:
  explicit SparseCholeskySolver(double relative_pivot_tol = 1e-12) : tol_(relative_pivot_tol) {}

  void analyze(const SparseMatrix& a) override { ldlt_.analyzePattern(a); }

  void factorize(const SparseMatrix& a) override {
    ldlt_.factorize(a);
    const Vector d = ldlt_.vectorD();
    const double dmax = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
    for (Index k = 0; k < d.size(); ++k) {
      if (!(d[k] > tol_ * dmax)) {
        // vectorD is in permuted order
        const long row = ldlt_.permutationPinv().indices()[k];
        throw SingularSystemError("stiffness matrix is singular at pivot " + std::to_string(row), row);
      }
    }
    if (ldlt_.info() != Eigen::Success) throw SingularSystemError("sparse factorization failed", -1);
  }

  Vector solve(const Vector& rhs) const override { return ldlt_.solve(rhs); }

private:
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt_;
  double tol_;
};

/// Linear-solver call accounting.
struct SolverStats {
  long factorizations = 0;
  long substitutions = 0;         // physical load cases (one per degree)
  long adjoint_substitutions = 0; // extra adjoint loads (stress responses)
};

/// Displacement field, total and per-element strain energies of one degree.
/// element_energies are evaluated at unit (solid) modulus.
struct DegreeSolution {
  Vector u;
  double energy = 0.0;
  std::vector<double> element_energies;
};

/// Global stiffness with a fixed free/prescribed partition.
///
/// Sparsity pattern, scatter maps and the symbolic factorization are built
/// once; assemble() and factor() only touch numeric values.
class GlobalSystem {
public:
  GlobalSystem(const Mesh& mesh, ElementStiffness ke, std::vector<Index> prescribed,
               std::unique_ptr<LinearSolver> solver = std::make_unique<SparseCholeskySolver>())
      : mesh_(&mesh), ke_(std::move(ke)), solver_(std::move(solver)) {
    const Index n = mesh.dof_count();
    std::sort(prescribed.begin(), prescribed.end());
    prescribed.erase(std::unique(prescribed.begin(), prescribed.end()), prescribed.end());
    local_.assign(n, -1);
    is_free_.assign(n, true);
    for (Index g : prescribed) {
      if (g < 0 || g >= n) throw std::invalid_argument("prescribed index out of range: " + std::to_string(g));
      is_free_[g] = false;
    }
    for (Index g = 0; g < n; ++g) {
      if (is_free_[g]) {
        local_[g] = Index(free_.size());
        free_.push_back(g);
      } else {
        local_[g] = Index(prescribed_.size());
        prescribed_.push_back(g);
      }
    }
    build_pattern();
  }

  GlobalSystem(const GlobalSystem&) = delete;
  GlobalSystem& operator=(const GlobalSystem&) = delete;

  const Mesh& mesh() const noexcept { return *mesh_; }
  const ElementStiffness& element_stiffness() const noexcept { return ke_; }
  const std::vector<Index>& free_dofs() const noexcept { return free_; }
  const std::vector<Index>& prescribed_dofs() const noexcept { return prescribed_; }
  const SparseMatrix& stiffness() const noexcept { return k_; }
  const SparseMatrix& k_ff() const noexcept { return kff_; }
  const SparseMatrix& k_fp() const noexcept { return kfp_; }
  const SparseMatrix& k_pp() const noexcept { return kpp_; }
  const SolverStats& stats() const noexcept { return stats_; }
  void reset_stats() noexcept { stats_ = {}; }
  bool factorized() const noexcept { return factorized_; }

  /// K = sum_e fraction_e * k_e. Scatter is done in a fixed order so the
  /// (i,j) and (j,i) sums are bitwise identical, i.e. K equals (K + K^T)/2.
  void assemble(std::span<const double> modulus_fractions) {
    if (Index(modulus_fractions.size()) != mesh_->element_count()) {
      throw std::invalid_argument("modulus fraction length " + std::to_string(modulus_fractions.size()) +
                                  " != element count " + std::to_string(mesh_->element_count()));
    }
    fractions_.assign(modulus_fractions.begin(), modulus_fractions.end());
    double* kv = k_.valuePtr();
    std::fill(kv, kv + k_.nonZeros(), 0.0);
    const int nd = mesh_->dofs_per_element();
    const std::int32_t* map = scatter_.data();
    for (Index e = 0; e < mesh_->element_count(); ++e) {
      const double s = modulus_fractions[e];
      for (int b = 0; b < nd; ++b)
        for (int a = 0; a < nd; ++a) kv[*map++] += s * ke_.matrix(a, b);
    }
    copy_block(kff_, kff_map_);
    copy_block(kfp_, kfp_map_);
    copy_block(kpp_, kpp_map_);
    factorized_ = false;
  }

  /// Factorizes K_ff. Singular pivots are reported as global indices.
  void factor() {
    if (free_.empty()) {
      factorized_ = true;
      ++stats_.factorizations;
      return;
    }
    try {
      solver_->factorize(kff_);
    } catch (const SingularSystemError& err) {
      factorized_ = false;
      const long global = err.pivot() >= 0 ? long(free_[err.pivot()]) : -1;
      throw SingularSystemError("K_ff is not positive definite at displacement index " + std::to_string(global),
                                global);
    }
    factorized_ = true;
    ++stats_.factorizations;
  }

  /// Gathers the prescribed entries of a full-length vector.
  Vector restrict_prescribed(const Vector& full) const {
    Vector up(Index(prescribed_.size()));
    for (std::size_t i = 0; i < prescribed_.size(); ++i) up[Index(i)] = full[prescribed_[i]];
    return up;
  }

  /// Solves K_ff u_f = -K_fp u_p and evaluates strain energies.
  DegreeSolution solve_degree(const Vector& u_p) {
    if (u_p.size() != Index(prescribed_.size())) {
      throw std::invalid_argument("prescribed vector length " + std::to_string(u_p.size()) + " != " +
                                  std::to_string(prescribed_.size()));
    }
    require_factor();
    Vector uf = free_.empty() ? Vector() : solver_->solve(-(kfp_ * u_p));
    ++stats_.substitutions;
    DegreeSolution sol;
    sol.u = Vector::Zero(mesh_->dof_count());
    for (std::size_t i = 0; i < free_.size(); ++i) sol.u[free_[i]] = uf[Index(i)];
    for (std::size_t i = 0; i < prescribed_.size(); ++i) sol.u[prescribed_[i]] = u_p[Index(i)];
    sol.energy = 0.5 * sol.u.dot(k_ * sol.u);
    sol.element_energies = element_energies(sol.u);
    return sol;
  }

  /// Adjoint solve K_ff lambda = rhs on the free partition.
  Vector solve_adjoint(const Vector& rhs_free) {
    if (rhs_free.size() != Index(free_.size())) throw std::invalid_argument("adjoint rhs length mismatch");
    require_factor();
    ++stats_.adjoint_substitutions;
    return free_.empty() ? Vector() : solver_->solve(rhs_free);
  }

  /// 1/2 u_e^T k_e u_e at unit modulus for every element.
  std::vector<double> element_energies(const Vector& u) const {
    const int nd = mesh_->dofs_per_element();
    std::vector<double> out(mesh_->element_count());
    Eigen::VectorXd ue(nd);
    for (Index e = 0; e < mesh_->element_count(); ++e) {
      gather(u, e, ue);
      out[e] = 0.5 * ue.dot(ke_.matrix * ue);
    }
    return out;
  }

  void gather(const Vector& u, Index e, Eigen::VectorXd& ue) const {
    const int dim = mesh_->dim();
    int k = 0;
    for (Index node : mesh_->element_nodes(e))
      for (int c = 0; c < dim; ++c) ue[k++] = u[node * dim + c];
  }

  const std::vector<double>& modulus_fractions() const noexcept { return fractions_; }

  /// Free-partition position of a global index, or -1 when prescribed.
  Index free_position(Index g) const noexcept { return is_free_[g] ? local_[g] : -1; }

private:
  void require_factor() const {
    if (!factorized_) throw std::logic_error("GlobalSystem: factor() must succeed before solving");
  }

  static void copy_block(SparseMatrix& dst, const std::vector<std::int32_t>& map_into_k, const double* kv) {
    double* v = dst.valuePtr();
    for (std::size_t i = 0; i < map_into_k.size(); ++i) v[i] = kv[map_into_k[i]];
  }
  void copy_block(SparseMatrix& dst, const std::vector<std::int32_t>& map) { copy_block(dst, map, k_.valuePtr()); }

  void build_pattern() {
    const Index n = mesh_->dof_count();
    const int nd = mesh_->dofs_per_element();
    std::vector<Eigen::Triplet<double, int>> trip;
    trip.reserve(std::size_t(mesh_->element_count()) * nd * nd);
    for (Index e = 0; e < mesh_->element_count(); ++e) {
      const auto dofs = mesh_->element_dof_map(e);
      for (int b = 0; b < nd; ++b)
        for (int a = 0; a < nd; ++a) trip.emplace_back(int(dofs[a]), int(dofs[b]), 1.0);
    }
    k_.resize(n, n);
    k_.setFromTriplets(trip.begin(), trip.end());
    k_.makeCompressed();

    scatter_.resize(trip.size());
    for (std::size_t t = 0; t < trip.size(); ++t) scatter_[t] = position(trip[t].row(), trip[t].col());

    // Blocks are built with the K value index stored as the entry, then read
    // back as the copy map. Indices below 2^31 are exact in a double.
    auto build_block = [&](SparseMatrix& blk, std::vector<std::int32_t>& map, bool row_free, bool col_free) {
      std::vector<Eigen::Triplet<double, int>> bt;
      for (int j = 0; j < k_.outerSize(); ++j) {
        for (int p = k_.outerIndexPtr()[j]; p < k_.outerIndexPtr()[j + 1]; ++p) {
          const int i = k_.innerIndexPtr()[p];
          if (is_free_[i] == row_free && is_free_[j] == col_free)
            bt.emplace_back(int(local_[i]), int(local_[j]), double(p));
        }
      }
      blk.resize(Index(row_free ? free_.size() : prescribed_.size()), Index(col_free ? free_.size() : prescribed_.size()));
      blk.setFromTriplets(bt.begin(), bt.end());
      blk.makeCompressed();
      map.resize(std::size_t(blk.nonZeros()));
      for (Index q = 0; q < blk.nonZeros(); ++q) map[q] = std::int32_t(blk.valuePtr()[q]);
    };
    build_block(kff_, kff_map_, true, true);
    build_block(kfp_, kfp_map_, true, false);
    build_block(kpp_, kpp_map_, false, false);
    if (!free_.empty()) solver_->analyze(kff_);
  }

  std::int32_t position(int row, int col) const {
    const int* begin = k_.innerIndexPtr() + k_.outerIndexPtr()[col];
    const int* end = k_.innerIndexPtr() + k_.outerIndexPtr()[col + 1];
    return std::int32_t(std::lower_bound(begin, end, row) - k_.innerIndexPtr());
  }

  const Mesh* mesh_;
  ElementStiffness ke_;
  std::unique_ptr<LinearSolver> solver_;
  std::vector<Index> free_, prescribed_, local_;
  std::vector<bool> is_free_;
  SparseMatrix k_, kff_, kfp_, kpp_;
  std::vector<std::int32_t> scatter_, kff_map_, kfp_map_, kpp_map_;
  std::vector<double> fractions_;
  SolverStats stats_;
  bool factorized_ = false;
};

} // namespace flexure
