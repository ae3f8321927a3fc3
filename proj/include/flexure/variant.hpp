#pragma once

// Robust (erode/dilate) and stress-constrained run variants layered on the
// base design loop.

#include "flexure/design_state.hpp"
#include "flexure/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace flexure {

enum class VariantMode { base, robust, stress, robust_stress };

inline const char* to_string(VariantMode m) {
  switch (m) {
  case VariantMode::base: return "base";
  case VariantMode::robust: return "robust";
  case VariantMode::stress: return "stress";
  case VariantMode::robust_stress: return "robust+stress";
  }
  return "?";
}

inline std::optional<VariantMode> parse_variant_mode(const std::string& s) {
  if (s == "base") return VariantMode::base;
  if (s == "robust") return VariantMode::robust;
  if (s == "stress") return VariantMode::stress;
  if (s == "robust+stress" || s == "robust_stress") return VariantMode::robust_stress;
  return std::nullopt;
}

struct RobustConfig {
  double eta = 0.5;
  double delta_eta = 0.2;
  double beta_init = 1.0;
  double beta_max = 64.0;
  int beta_interval = 50; // iterations between doublings
  std::optional<double> filter_radius;
};

struct StressConfig {
  /// Absolute allowable stress, or a factor times a reference run's
  /// reported maximum relaxed von Mises stress.
  std::optional<double> sigma_bar;
  std::optional<double> sigma_bar_factor;
  std::string reference_report;
  /// Optional per-DOF absolute bounds (same order as dof).
  std::vector<double> sigma_bar_per_dof;
  double aggregation = 10.0;
  double relaxation = 0.5;
  bool adaptive_normalization = true;
};

struct VariantConfig {
  VariantMode mode = VariantMode::base;
  RobustConfig robust;
  StressConfig stress;
};

/// Resolved, executable description of a variant.
struct RunPlan {
  VariantMode mode = VariantMode::base;
  bool project = false;
  Realization objective_realization = Realization::intermediate;
  Realization constraint_realization = Realization::intermediate;
  int factorizations_per_iteration = 1;
  double filter_radius = 2.0;
  double eta = 0.5, delta_eta = 0.0;
  double beta_init = 0.0, beta_max = 0.0;
  int beta_interval = 0;
  bool stress = false;
  std::vector<double> sigma_bar; // per DOF
  double aggregation = 10.0;
  double relaxation = 0.5;
  bool adaptive_normalization = true;

  /// Projection steepness in effect at iteration k.
  double beta_at(std::size_t k) const {
    if (!project) return 0.0;
    double b = beta_init;
    for (std::size_t i = std::size_t(beta_interval); beta_interval > 0 && i <= k && b < beta_max; i += std::size_t(beta_interval))
      b *= 2.0;
    return std::min(b, beta_max);
  }
  bool continuation_done(std::size_t k) const { return !project || beta_at(k) >= beta_max; }
};

/// Reads per-DOF maximum relaxed von Mises stresses from a run report.
inline std::vector<double> read_reference_stress(const std::string& path, const std::vector<std::string>& dof) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference report '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("reference report '" + path + "' is not valid JSON: " + e.what());
  }
  std::vector<double> out;
  for (const auto& id : dof) {
    const auto& table = j.value("max_relaxed_von_mises", nlohmann::json::object());
    if (!table.contains(id)) throw ConfigError("reference report '" + path + "' has no stress for dof '" + id + "'");
    out.push_back(table.at(id).get<double>());
  }
  return out;
}

/// Builds the run plan for a variant over `dof`. Robust modes always carry
/// an explicit filter radius (robust.filter_radius or base_radius).
inline RunPlan configure_variant(const VariantConfig& v, double base_radius, const std::vector<std::string>& dof) {
  RunPlan plan;
  plan.mode = v.mode;
  plan.filter_radius = base_radius;
  const bool robust = v.mode == VariantMode::robust || v.mode == VariantMode::robust_stress;
  const bool stress = v.mode == VariantMode::stress || v.mode == VariantMode::robust_stress;
  if (robust) {
    const auto& r = v.robust;
    if (!(r.eta > 0.0 && r.eta < 1.0)) throw ConfigError("robust eta must be in (0,1)");
    if (!(r.delta_eta > 0.0 && r.delta_eta < std::min(r.eta, 1.0 - r.eta)))
      throw ConfigError("robust delta_eta must satisfy 0 < delta_eta < min(eta, 1-eta)");
    if (!(r.beta_init > 0.0 && r.beta_max >= r.beta_init)) throw ConfigError("robust beta schedule is invalid");
    if (r.filter_radius && !(*r.filter_radius >= 1.0)) throw ConfigError("robust filter radius must be >= 1");
    plan.project = true;
    plan.eta = r.eta;
    plan.delta_eta = r.delta_eta;
    plan.beta_init = r.beta_init;
    plan.beta_max = r.beta_max;
    plan.beta_interval = r.beta_interval;
    plan.filter_radius = r.filter_radius.value_or(base_radius);
    plan.objective_realization = Realization::eroded;
    plan.constraint_realization = Realization::dilated;
    plan.factorizations_per_iteration = 2;
  }
  if (stress) {
    const auto& s = v.stress;
    if (!(s.aggregation >= 1.0)) throw ConfigError("stress aggregation exponent must be >= 1");
    if (!(s.relaxation > 0.0)) throw ConfigError("stress relaxation exponent must be > 0");
    plan.stress = true;
    plan.aggregation = s.aggregation;
    plan.relaxation = s.relaxation;
    plan.adaptive_normalization = s.adaptive_normalization;
    if (!s.sigma_bar_per_dof.empty()) {
      if (s.sigma_bar_per_dof.size() != dof.size()) throw ConfigError("sigma_bar_per_dof length must match dof");
      plan.sigma_bar = s.sigma_bar_per_dof;
    } else if (s.sigma_bar) {
      plan.sigma_bar.assign(dof.size(), *s.sigma_bar);
    } else if (s.sigma_bar_factor) {
      if (s.reference_report.empty()) throw ConfigError("sigma_bar_factor needs a reference_report");
      plan.sigma_bar = read_reference_stress(s.reference_report, dof);
      for (double& v : plan.sigma_bar) v *= *s.sigma_bar_factor;
    } else {
      throw ConfigError("stress mode needs sigma_bar or sigma_bar_factor");
    }
    for (double sb : plan.sigma_bar)
      if (!(sb > 0.0)) throw ConfigError("allowable stress must be > 0");
  }
  return plan;
}

} // namespace flexure
