#pragma once

// JSON run-configuration files. Every key is optional; omitted keys keep
// the RunConfig defaults. See README for the schema.

#include "flexure/driver.hpp"
#include "flexure/errors.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace flexure {

namespace detail {

// Accepts either a string or a list of strings ("tx" or ["tx","rz"]).
inline std::vector<std::string> string_list(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  return j.get<std::vector<std::string>>();
}

inline std::vector<double> number_list(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

inline MirrorAxis parse_axis(const std::string& s) {
  if (s == "x") return MirrorAxis::x;
  if (s == "y") return MirrorAxis::y;
  if (s == "z") return MirrorAxis::z;
  throw ConfigError("unknown symmetry axis '" + s + "'");
}

} // namespace detail

inline std::vector<MirrorAxis> parse_symmetry(const std::vector<std::string>& axes) {
  std::vector<MirrorAxis> out;
  for (const auto& a : axes)
    if (a != "none") out.push_back(detail::parse_axis(a));
  return out;
}

inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  try {
    if (j.contains("nelx")) c.nelx = j["nelx"].get<int>();
    if (j.contains("nely")) c.nely = j["nely"].get<int>();
    if (j.contains("nelz")) {
      if (j["nelz"].is_null()) c.nelz.reset();
      else c.nelz = j["nelz"].get<int>();
    }
    if (j.contains("doc")) c.doc = detail::string_list(j["doc"]);
    if (j.contains("dof")) c.dof = detail::string_list(j["dof"]);
    if (j.contains("emax")) c.emax = detail::number_list(j["emax"]);
    if (j.contains("emax_mode")) {
      const auto m = j["emax_mode"].get<std::string>();
      if (m == "normalized") c.emax_mode = EnergyBoundMode::normalized;
      else if (m == "raw") c.emax_mode = EnergyBoundMode::raw;
      else throw ConfigError("emax_mode must be 'normalized' or 'raw'");
    }
    if (j.contains("doc_weights")) c.doc_weights = detail::number_list(j["doc_weights"]);
    if (j.contains("objective")) {
      const auto m = j["objective"].get<std::string>();
      if (m == "sum") c.objective_mode = ObjectiveMode::sum;
      else if (m == "smooth_min") c.objective_mode = ObjectiveMode::smooth_min;
      else throw ConfigError("objective must be 'sum' or 'smooth_min'");
    }
    if (j.contains("constants")) {
      const auto& k = j["constants"];
      c.stiffness_ratio = k.value("stiffness_ratio", c.stiffness_ratio);
      c.poisson = k.value("poisson", c.poisson);
      c.penalty = k.value("penalty", c.penalty);
      c.filter_radius = k.value("filter_radius", c.filter_radius);
      c.termination.design_change = k.value("design_change", c.termination.design_change);
      c.initial_density = k.value("initial_density", c.initial_density);
      c.x_min = k.value("x_min", c.x_min);
    }
    if (j.contains("rz_convention")) {
      const auto m = j["rz_convention"].get<std::string>();
      if (m == "table") c.rz_convention = RotationConvention::table;
      else if (m == "centered") c.rz_convention = RotationConvention::centered;
      else throw ConfigError("rz_convention must be 'table' or 'centered'");
    }
    if (j.contains("symmetry")) c.symmetry = parse_symmetry(detail::string_list(j["symmetry"]));
    if (j.contains("volume_fraction")) {
      if (j["volume_fraction"].is_null()) c.volume_fraction.reset();
      else c.volume_fraction = j["volume_fraction"].get<double>();
    }
    if (j.contains("variant")) {
      const auto& v = j["variant"];
      if (v.contains("mode")) {
        const auto m = parse_variant_mode(v["mode"].get<std::string>());
        if (!m) throw ConfigError("unknown variant mode '" + v["mode"].get<std::string>() + "'");
        c.variant.mode = *m;
      }
      if (v.contains("robust")) {
        const auto& r = v["robust"];
        auto& rc = c.variant.robust;
        rc.eta = r.value("eta", rc.eta);
        rc.delta_eta = r.value("delta_eta", rc.delta_eta);
        rc.beta_init = r.value("beta_init", rc.beta_init);
        rc.beta_max = r.value("beta_max", rc.beta_max);
        rc.beta_interval = r.value("beta_interval", rc.beta_interval);
        if (r.contains("filter_radius")) rc.filter_radius = r["filter_radius"].get<double>();
      }
      if (v.contains("stress")) {
        const auto& s = v["stress"];
        auto& sc = c.variant.stress;
        if (s.contains("sigma_bar")) sc.sigma_bar = s["sigma_bar"].get<double>();
        if (s.contains("sigma_bar_factor")) sc.sigma_bar_factor = s["sigma_bar_factor"].get<double>();
        sc.reference_report = s.value("reference_report", sc.reference_report);
        if (s.contains("sigma_bar_per_dof")) sc.sigma_bar_per_dof = detail::number_list(s["sigma_bar_per_dof"]);
        sc.aggregation = s.value("aggregation", sc.aggregation);
        sc.relaxation = s.value("relaxation", sc.relaxation);
        sc.adaptive_normalization = s.value("adaptive_normalization", sc.adaptive_normalization);
      }
    }
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      auto& ml = c.mma.move;
      ml.init = o.value("ml_init", ml.init);
      ml.increase = o.value("ml_incr", ml.increase);
      ml.decrease = o.value("ml_decr", ml.decrease);
      ml.min = o.value("ml_min", ml.min);
      ml.max = o.value("ml_max", ml.max);
      ml.oscillation_threshold = o.value("ml_osc_fraction", ml.oscillation_threshold);
      ml.oscillation_floor = o.value("ml_osc_floor", ml.oscillation_floor);
      ml.oscillation_floor_relative = o.value("ml_osc_floor_rel", ml.oscillation_floor_relative);
      c.mma.asymptote_init = o.value("asy_init", c.mma.asymptote_init);
      c.mma.asymptote_increase = o.value("asy_incr", c.mma.asymptote_increase);
      c.mma.asymptote_decrease = o.value("asy_decr", c.mma.asymptote_decrease);
      c.termination.kkt = o.value("tol_kkt", c.termination.kkt);
      c.termination.feasibility = o.value("tol_feas", c.termination.feasibility);
      c.termination.max_iterations = o.value("max_iterations", c.termination.max_iterations);
    }
    c.threads = j.value("threads", c.threads);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("configuration '" + path.string() + "' is not valid JSON: " + e.what());
  }
  RunConfig c;
  apply_config_json(c, j);
  return c;
}

} // namespace flexure
