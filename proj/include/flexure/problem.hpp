#pragma once

// One analysis pass of the nested analysis-and-design loop: design
// parametrization, assembly, one factorization per realization, one
// substitution per active degree, and all responses with sensitivities.

#include "flexure/degrees.hpp"
#include "flexure/design_state.hpp"
#include "flexure/fem.hpp"
#include "flexure/responses.hpp"
#include "flexure/variant.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace flexure {

struct ProblemSettings {
  double poisson = 0.3;
  double penalty = 3.0;
  double stiffness_ratio = 1e-6;
  std::vector<MirrorAxis> symmetry;
  RotationConvention rz_convention = RotationConvention::table;
  std::vector<double> emax;
  EnergyBoundMode emax_mode = EnergyBoundMode::normalized;
  std::vector<double> doc_weights;
  ObjectiveMode objective_mode = ObjectiveMode::sum;
  std::optional<double> volume_fraction;
  /// Scales every prescribed field (the normalized responses are invariant).
  double displacement_scale = 1.0;
};

struct Evaluation {
  DesignState state;
  double f = 0.0;   // maximized objective
  Field df;         // d f / d x
  std::vector<double> g;
  std::vector<Field> dg;
  std::vector<EnergyResponse> energies; // doc then dof order
  std::vector<StressResponse> stress;   // one per DOF when stress is on
  SolverStats effort;                    // solver calls of this evaluation
};

class ResponseEvaluator {
public:
  ResponseEvaluator(const Mesh& mesh, ProblemDegreeSets degrees, RunPlan plan, ProblemSettings settings)
      : mesh_(&mesh), degrees_(std::move(degrees)), plan_(std::move(plan)), settings_(std::move(settings)),
        pipeline_(mesh, pipeline_settings()) {
    if (settings_.emax.size() != degrees_.dof.size()) throw ConfigError("emax needs one bound per dof");
    for (double e : settings_.emax)
      if (!(e > 0.0)) throw ConfigError("emax entries must be > 0");
    if (!settings_.doc_weights.empty() && settings_.doc_weights.size() != degrees_.doc.size())
      throw ConfigError("doc_weights needs one weight per doc");
    if (plan_.stress && plan_.sigma_bar.size() != degrees_.dof.size())
      throw ConfigError("stress plan needs one allowable stress per dof");
    const auto ke = element_stiffness(mesh.dim(), settings_.poisson);
    const auto prescribed = interface_dofs(mesh);
    systems_.push_back(std::make_unique<GlobalSystem>(mesh, ke, prescribed));
    if (plan_.factorizations_per_iteration == 2) systems_.push_back(std::make_unique<GlobalSystem>(mesh, ke, prescribed));
    for (Degree d : degrees_.all()) {
      const auto field = prescribed_field(d, mesh, settings_.rz_convention);
      prescribed_.push_back(systems_.front()->restrict_prescribed(field.values * settings_.displacement_scale));
    }
    stress_norm_.assign(degrees_.dof.size(), 1.0);
  }

  const Mesh& mesh() const noexcept { return *mesh_; }
  const ProblemDegreeSets& degrees() const noexcept { return degrees_; }
  const RunPlan& plan() const noexcept { return plan_; }
  const ProblemSettings& settings() const noexcept { return settings_; }
  DesignPipeline& pipeline() noexcept { return pipeline_; }
  const DesignPipeline& pipeline() const noexcept { return pipeline_; }

  std::size_t constraint_count() const noexcept {
    return degrees_.dof.size() * (plan_.stress ? 2 : 1) + (settings_.volume_fraction ? 1 : 0);
  }

  const std::optional<std::vector<double>>& reference_energies() const noexcept { return reference_; }
  void set_reference_energies(std::vector<double> e) { reference_ = std::move(e); }

  /// Adaptive stress normalization factors (frozen within an evaluation).
  const std::vector<double>& stress_normalization() const noexcept { return stress_norm_; }
  void set_stress_normalization(std::vector<double> c) { stress_norm_ = std::move(c); }

  /// Solutions of the last evaluation, doc then dof order.
  const std::vector<DegreeSolution>& solutions() const noexcept { return solutions_; }

  /// Evaluates all responses at raw design x. The first call freezes the
  /// reference energies used for normalization.
  Evaluation evaluate(std::span<const double> x) {
    Evaluation ev;
    ev.state = pipeline_.forward(x);
    const auto all = degrees_.all();
    const std::size_t ndoc = degrees_.doc.size();
    const SolverStats before = total_stats();

    solutions_.assign(all.size(), {});
    auto analyze = [&](GlobalSystem& sys, Realization r, std::size_t from, std::size_t to) {
      sys.assemble(ev.state.at(r).interp.fraction);
      sys.factor();
      for (std::size_t i = from; i < to; ++i) solutions_[i] = sys.solve_degree(prescribed_[i]);
    };
    if (systems_.size() == 2) {
      analyze(*systems_[0], plan_.objective_realization, 0, ndoc);
      analyze(*systems_[1], plan_.constraint_realization, ndoc, all.size());
    } else {
      analyze(*systems_[0], plan_.objective_realization, 0, all.size());
    }

    if (!reference_) {
      std::vector<double> e0;
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (!(solutions_[i].energy > 0.0)) {
          throw DegenerateProblemError("degree '" + std::string(to_string(all[i])) +
                                       "' has zero strain energy on the initial design");
        }
        e0.push_back(solutions_[i].energy);
      }
      reference_ = std::move(e0);
    }

    for (std::size_t i = 0; i < all.size(); ++i) {
      const Realization r = i < ndoc ? plan_.objective_realization : plan_.constraint_realization;
      ev.energies.push_back(energy_response(pipeline_, ev.state, r, solutions_[i], (*reference_)[i]));
    }

    std::vector<double> alphas;
    std::vector<Field> dalphas;
    for (std::size_t i = 0; i < ndoc; ++i) {
      alphas.push_back(ev.energies[i].alpha);
      dalphas.push_back(ev.energies[i].dalpha_dx);
    }
    auto obj = objective(alphas, dalphas, settings_.doc_weights, settings_.objective_mode);
    ev.f = obj.value;
    ev.df = std::move(obj.gradient);

    for (std::size_t j = 0; j < degrees_.dof.size(); ++j) {
      auto c = dof_constraint(ev.energies[ndoc + j], settings_.emax[j], settings_.emax_mode);
      ev.g.push_back(c.value);
      ev.dg.push_back(std::move(c.gradient));
    }

    if (plan_.stress) {
      GlobalSystem& sys = *systems_.back();
      const auto& layer = ev.state.at(plan_.constraint_realization);
      for (std::size_t j = 0; j < degrees_.dof.size(); ++j) {
        StressSettings cfg{plan_.sigma_bar[j], plan_.aggregation, plan_.relaxation};
        auto s = stress_constraint(sys, solutions_[ndoc + j], layer, cfg, 1.0);
        if (plan_.adaptive_normalization && !stress_initialized_) {
          stress_norm_[j] = s.pmean > 0.0 ? s.max_relaxed_stress / plan_.sigma_bar[j] / s.pmean : 1.0;
        }
        const double c = plan_.adaptive_normalization ? stress_norm_[j] : 1.0;
        s.value = c * s.pmean - 1.0;
        for (double& v : s.gradient_physical) v *= c;
        ev.g.push_back(s.value);
        ev.dg.push_back(pipeline_.backward(ev.state, plan_.constraint_realization, s.gradient_physical));
        ev.stress.push_back(std::move(s));
      }
      stress_initialized_ = true;
    }

    if (settings_.volume_fraction) {
      auto v = volume_constraint(ev.state.at(Realization::intermediate).physical, *settings_.volume_fraction);
      ev.g.push_back(v.value);
      ev.dg.push_back(pipeline_.backward(ev.state, Realization::intermediate, v.gradient));
    }

    const SolverStats after = total_stats();
    ev.effort.factorizations = after.factorizations - before.factorizations;
    ev.effort.substitutions = after.substitutions - before.substitutions;
    ev.effort.adjoint_substitutions = after.adjoint_substitutions - before.adjoint_substitutions;
    return ev;
  }

  /// Moves the adaptive stress normalization to the ratio max/pmean of the
  /// evaluation just made; the next evaluation uses it frozen.
  void update_stress_normalization(const Evaluation& ev) {
    if (!plan_.stress || !plan_.adaptive_normalization) return;
    for (std::size_t j = 0; j < ev.stress.size(); ++j) {
      const auto& s = ev.stress[j];
      if (s.pmean > 0.0) stress_norm_[j] = s.max_relaxed_stress / plan_.sigma_bar[j] / s.pmean;
    }
  }

  SolverStats total_stats() const {
    SolverStats s;
    for (const auto& sys : systems_) {
      s.factorizations += sys->stats().factorizations;
      s.substitutions += sys->stats().substitutions;
      s.adjoint_substitutions += sys->stats().adjoint_substitutions;
    }
    return s;
  }

  /// Raw strain energies of every degree on a given realization. Uses a
  /// separate system so loop accounting is unaffected.
  std::vector<double> energies_on(const DesignState& state, Realization r) const {
    GlobalSystem sys(*mesh_, element_stiffness(mesh_->dim(), settings_.poisson), interface_dofs(*mesh_));
    sys.assemble(state.at(r).interp.fraction);
    sys.factor();
    std::vector<double> out;
    for (const auto& up : prescribed_) out.push_back(sys.solve_degree(up).energy);
    return out;
  }

  /// Maximum relaxed von Mises stress of each DOF case on a realization.
  std::vector<double> max_relaxed_stress(const DesignState& state, Realization r, double relaxation) const {
    GlobalSystem sys(*mesh_, element_stiffness(mesh_->dim(), settings_.poisson), interface_dofs(*mesh_));
    sys.assemble(state.at(r).interp.fraction);
    sys.factor();
    const StressEvaluator eval(*mesh_, settings_.poisson);
    const auto& phys = state.at(r).physical;
    std::vector<double> out;
    for (std::size_t j = 0; j < degrees_.dof.size(); ++j) {
      const auto sol = sys.solve_degree(prescribed_[degrees_.doc.size() + j]);
      const auto vm = eval.von_mises_field(sol.u);
      double mx = 0.0;
      for (std::size_t e = 0; e < vm.size(); ++e)
        mx = std::max(mx, std::pow(std::max(phys[e], 0.0), relaxation) * vm[e]);
      out.push_back(mx);
    }
    return out;
  }

private:
  PipelineSettings pipeline_settings() const {
    PipelineSettings p;
    p.filter_radius = plan_.filter_radius;
    p.penalty = settings_.penalty;
    p.stiffness_ratio = settings_.stiffness_ratio;
    p.symmetry = settings_.symmetry;
    p.project = plan_.project;
    p.beta = plan_.beta_init;
    p.eta = plan_.eta;
    p.delta_eta = plan_.delta_eta;
    return p;
  }

  const Mesh* mesh_;
  ProblemDegreeSets degrees_;
  RunPlan plan_;
  ProblemSettings settings_;
  DesignPipeline pipeline_;
  std::vector<std::unique_ptr<GlobalSystem>> systems_;
  std::vector<Vector> prescribed_;
  std::optional<std::vector<double>> reference_;
  std::vector<double> stress_norm_;
  bool stress_initialized_ = false;
  std::vector<DegreeSolution> solutions_;
};

} // namespace flexure
