#pragma once

#include "flexure/degrees.hpp"
#include "flexure/errors.hpp"
#include "flexure/optimizer.hpp"
#include "flexure/problem.hpp"
#include "flexure/variant.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace flexure {

/// Full run configuration. Defaults reproduce the constant table of the
/// formulation (eps 1e-6, nu 0.3, p 3, r 2, design change 1e-3, x0 0.5).
struct RunConfig {
  int nelx = 100;
  int nely = 100;
  std::optional<int> nelz;
  std::vector<std::string> doc{"tx"};
  std::vector<std::string> dof{"ty"};
  std::vector<double> emax{1.2};
  EnergyBoundMode emax_mode = EnergyBoundMode::normalized;
  std::vector<double> doc_weights;
  ObjectiveMode objective_mode = ObjectiveMode::sum;

  double stiffness_ratio = 1e-6;
  double poisson = 0.3;
  double penalty = 3.0;
  double filter_radius = 2.0;
  double initial_density = 0.5;
  double x_min = 1e-3;
  double displacement_scale = 1.0;
  RotationConvention rz_convention = RotationConvention::table;
  /// Mirror axes; unset means x in 2D and x, y in 3D.
  std::optional<std::vector<MirrorAxis>> symmetry;
  std::optional<double> volume_fraction;

  VariantConfig variant;
  MmaSettings mma;
  TerminationLimits termination;

  int threads = 1;
  std::string output_dir;  // empty: no files
  int snapshot_every = 0;  // density snapshots (2D PGM), 0 disables

  int dim() const noexcept { return nelz ? 3 : 2; }
  std::vector<MirrorAxis> symmetry_axes() const {
    if (symmetry) return *symmetry;
    return dim() == 2 ? std::vector<MirrorAxis>{MirrorAxis::x} : std::vector<MirrorAxis>{MirrorAxis::x, MirrorAxis::y};
  }
};

struct LogRow {
  std::size_t k = 0;
  double f = 0.0;
  std::vector<double> g;
  double change = 0.0;
  double kkt = 0.0;
  std::vector<double> energies; // raw, doc then dof
  std::vector<double> alphas;
  double beta = 0.0;
  double move_limit = 0.0;
  SolverStats effort;
};

struct RunResult {
  std::vector<std::string> degree_ids; // doc then dof
  std::size_t doc_count = 0;
  RunPlan plan;
  DesignState design;          // final raw / filtered / projected fields
  Field nominal;               // exported design (intermediate realization)
  std::vector<LogRow> log;
  TerminationReport termination;
  std::vector<double> reference_energies;
  std::vector<double> max_relaxed_von_mises; // per dof, on the constraint realization
  double stress_relaxation = 0.5;
  double non_discreteness = 0.0;
  /// Robust runs: raw energies of every degree on eroded/intermediate/dilated.
  std::vector<std::vector<double>> realization_energies;
  int nelx = 0, nely = 0, nelz = 0;

  const LogRow& final_row() const { return log.back(); }
  double objective() const { return log.empty() ? 0.0 : log.back().f; }
};

/// Checks everything that can be checked before allocating the problem.
inline ProblemDegreeSets validate_config(const RunConfig& c) {
  if (c.nelx < 1 || c.nely < 1 || (c.nelz && *c.nelz < 1)) {
    throw ConfigError("element counts must be >= 1 (nelx=" + std::to_string(c.nelx) +
                      ", nely=" + std::to_string(c.nely) + ")");
  }
  auto sets = validate_degree_sets(c.doc, c.dof, c.dim());
  if (c.emax.size() != c.dof.size()) throw ConfigError("emax must have one entry per dof");
  for (double e : c.emax)
    if (!(e > 0.0)) throw ConfigError("emax entries must be > 0");
  if (!(c.initial_density > 0.0 && c.initial_density <= 1.0)) throw ConfigError("initial density must be in (0,1]");
  if (!(c.x_min > 0.0 && c.x_min < c.initial_density + 1e-15)) throw ConfigError("x_min must be in (0, x0]");
  if (!(c.filter_radius >= 1.0)) throw ConfigError("filter radius must be >= 1");
  if (c.volume_fraction && !(*c.volume_fraction > 0.0 && *c.volume_fraction <= 1.0))
    throw ConfigError("volume fraction must be in (0,1]");
  if (c.termination.max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  return sets;
}

using IterationObserver = std::function<void(const LogRow&)>;
using SnapshotWriter = std::function<void(std::size_t k, const Mesh&, const Field&)>;

/// Runs the design loop: symmetrize -> filter -> (project) -> SIMP ->
/// assemble -> factor -> solve degrees -> responses -> MMA step, until the
/// termination test passes or the iteration limit is hit.
inline RunResult run(const RunConfig& config, const IterationObserver& observer = {},
                     const SnapshotWriter& snapshot = {}) {
  const auto sets = validate_config(config);
  const RunPlan plan = configure_variant(config.variant, config.filter_radius, config.dof);
  Eigen::setNbThreads(config.threads);

  const Mesh mesh(config.nelx, config.nely, config.nelz);
  ProblemSettings ps;
  ps.poisson = config.poisson;
  ps.penalty = config.penalty;
  ps.stiffness_ratio = config.stiffness_ratio;
  ps.symmetry = config.symmetry_axes();
  ps.rz_convention = config.rz_convention;
  ps.emax = config.emax;
  ps.emax_mode = config.emax_mode;
  ps.doc_weights = config.doc_weights;
  ps.objective_mode = config.objective_mode;
  ps.volume_fraction = config.volume_fraction;
  ps.displacement_scale = config.displacement_scale;
  ResponseEvaluator problem(mesh, sets, plan, ps);

  const std::size_t n = std::size_t(mesh.element_count());
  MmaOptimizer mma(n, problem.constraint_count(), config.x_min, 1.0, config.mma);

  RunResult result;
  for (Degree d : sets.all()) result.degree_ids.emplace_back(to_string(d));
  result.doc_count = sets.doc.size();
  result.plan = plan;
  result.nelx = config.nelx;
  result.nely = config.nely;
  result.nelz = config.nelz.value_or(0);

  std::vector<double> x(n, config.initial_density), x_prev;
  Evaluation ev;
  for (std::size_t k = 0;; ++k) {
    problem.pipeline().set_beta(plan.beta_at(k));
    try {
      ev = problem.evaluate(x);
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(k) + ": " + e.what());
    }

    LogRow row;
    row.k = k;
    row.f = ev.f;
    row.g = ev.g;
    row.change = 1.0;
    if (!x_prev.empty()) {
      row.change = 0.0;
      for (std::size_t j = 0; j < n; ++j) row.change = std::max(row.change, std::abs(x[j] - x_prev[j]));
    }
    Field neg_df(ev.df.size());
    for (std::size_t j = 0; j < n; ++j) neg_df[j] = -ev.df[j];
    row.kkt = mma.kkt_norm(x, neg_df, ev.g, ev.dg);
    for (const auto& e : ev.energies) {
      row.energies.push_back(e.energy);
      row.alphas.push_back(e.alpha);
    }
    row.beta = ev.state.beta;
    row.move_limit = mma.move_limit();
    row.effort = ev.effort;
    if (observer) observer(row);
    if (snapshot && config.snapshot_every > 0 && k % std::size_t(config.snapshot_every) == 0)
      snapshot(k, mesh, ev.state.at(Realization::intermediate).physical);

    auto term = check_termination(row.change, row.kkt, ev.g, k, config.termination);
    if (term.converged && !plan.continuation_done(k)) {
      // projection still sharpening; keep going
      term.converged = false;
      term.reason = k >= config.termination.max_iterations ? StopReason::max_iterations : StopReason::none;
    }
    result.log.push_back(std::move(row));
    if (term.stop()) {
      result.termination = term;
      break;
    }

    problem.update_stress_normalization(ev);
    auto step = mma.step(x, -ev.f, neg_df, ev.g, ev.dg);
    x_prev = std::move(x);
    x = ps.symmetry.empty() ? std::move(step.x) : symmetrize(mesh, step.x, ps.symmetry);
  }

  result.design = ev.state;
  result.nominal = ev.state.at(Realization::intermediate).physical;
  result.reference_energies = *problem.reference_energies();
  result.stress_relaxation = plan.stress ? plan.relaxation : config.variant.stress.relaxation;
  result.max_relaxed_von_mises =
      problem.max_relaxed_stress(ev.state, plan.constraint_realization, result.stress_relaxation);
  result.non_discreteness = measure_non_discreteness(result.nominal);
  if (plan.project) {
    for (Realization r : {Realization::eroded, Realization::intermediate, Realization::dilated})
      result.realization_energies.push_back(problem.energies_on(ev.state, r));
  }
  return result;
}

} // namespace flexure
