#pragma once

#include "flexure/field_ops.hpp"

#include <array>
#include <optional>
#include <vector>

namespace flexure {

/// Which projected realization of the design a response is evaluated on.
/// Without projection every realization is the filtered field.
enum class Realization { eroded = 0, intermediate = 1, dilated = 2 };

inline const char* to_string(Realization r) {
  switch (r) {
  case Realization::eroded: return "eroded";
  case Realization::intermediate: return "intermediate";
  case Realization::dilated: return "dilated";
  }
  return "?";
}

struct PipelineSettings {
  double filter_radius = 2.0;
  double penalty = 3.0;
  double stiffness_ratio = 1e-6;
  std::vector<MirrorAxis> symmetry;
  bool project = false;
  double beta = 1.0;
  double eta = 0.5;
  double delta_eta = 0.0;
};

/// Layered density fields: raw -> symmetrized -> filtered -> projected ->
/// modulus fractions.
struct DesignState {
  struct Layer {
    double threshold = 0.5;
    Field physical;   // projected (or filtered) density
    Field dphysical;  // d physical / d filtered
    Interpolation interp;
  };
  Field raw;
  Field filtered;
  std::array<Layer, 3> layers; // indexed by Realization
  double beta = 0.0;

  const Layer& at(Realization r) const { return layers[std::size_t(r)]; }
};

/// Forward map and chain rule of the design parametrization.
class DesignPipeline {
public:
  DesignPipeline(const Mesh& mesh, PipelineSettings settings)
      : mesh_(&mesh), settings_(std::move(settings)), filter_(mesh, settings_.filter_radius) {
    if (settings_.project) {
      const double de = settings_.delta_eta;
      if (!(de >= 0.0 && de < std::min(settings_.eta, 1.0 - settings_.eta)))
        throw ConfigError("delta_eta must satisfy 0 <= delta_eta < min(eta, 1-eta)");
    }
  }

  const Mesh& mesh() const noexcept { return *mesh_; }
  const PipelineSettings& settings() const noexcept { return settings_; }
  const FilterOperator& filter() const noexcept { return filter_; }
  void set_beta(double beta) noexcept { settings_.beta = beta; }

  /// Projection threshold of a realization (eroded uses the higher one).
  double threshold(Realization r) const noexcept {
    const double sign = r == Realization::eroded ? 1.0 : r == Realization::dilated ? -1.0 : 0.0;
    return settings_.eta + sign * settings_.delta_eta;
  }

  DesignState forward(std::span<const double> x) const {
    DesignState s;
    s.raw = settings_.symmetry.empty() ? Field(x.begin(), x.end()) : symmetrize(*mesh_, x, settings_.symmetry);
    s.filtered = filter_.apply(s.raw);
    s.beta = settings_.project ? settings_.beta : 0.0;
    for (Realization r : {Realization::eroded, Realization::intermediate, Realization::dilated}) {
      auto& layer = s.layers[std::size_t(r)];
      layer.threshold = threshold(r);
      if (settings_.project) {
        auto proj = heaviside_project(s.filtered, settings_.beta, layer.threshold);
        layer.physical = std::move(proj.value);
        layer.dphysical = std::move(proj.derivative);
      } else {
        layer.physical = s.filtered;
        layer.dphysical.assign(s.filtered.size(), 1.0);
      }
      layer.interp = simp(layer.physical, settings_.penalty, settings_.stiffness_ratio);
    }
    return s;
  }

  /// Pulls a sensitivity w.r.t. a realization's physical field back to the
  /// raw design variables.
  Field backward(const DesignState& s, Realization r, std::span<const double> d_physical) const {
    detail::check_length(d_physical.size(), mesh_->element_count(), "pipeline backward");
    const auto& layer = s.at(r);
    Field d_filtered(d_physical.size());
    for (std::size_t j = 0; j < d_filtered.size(); ++j) d_filtered[j] = d_physical[j] * layer.dphysical[j];
    Field d_raw = filter_.chain_rule(d_filtered);
    if (!settings_.symmetry.empty()) d_raw = symmetrize_gradient(*mesh_, d_raw, settings_.symmetry);
    return d_raw;
  }

private:
  const Mesh* mesh_;
  PipelineSettings settings_;
  FilterOperator filter_;
};

} // namespace flexure
