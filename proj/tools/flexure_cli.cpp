// Command-line front end: flexure run [--config file] [overrides...]
//
// Exit codes: 0 converged, 2 stopped at the iteration limit, 1 error.

#include "flexure/flexure.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

void print_row(const flexure::LogRow& row) {
  std::printf("k=%4zu f=%10.5f", row.k, row.f);
  for (std::size_t i = 0; i < row.g.size(); ++i) std::printf(" g%zu=%+9.5f", i + 1, row.g[i]);
  std::printf(" change=%8.2e kkt=%8.2e", row.change, row.kkt);
  if (row.beta > 0.0) std::printf(" beta=%g", row.beta);
  std::printf("\n");
  std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strain-energy based flexure topology optimization"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run one design optimization");
  std::string config_path;
  std::optional<int> nelx, nely, nelz, threads, max_iter;
  std::vector<std::string> doc, dof;
  std::vector<double> emax;
  std::string mode, out;
  std::optional<double> eta, deta, sigma_bar, sigma_bar_factor, radius;
  std::string reference;
  bool quiet = false;

  run_cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  run_cmd->add_option("--nelx", nelx, "Elements along x");
  run_cmd->add_option("--nely", nely, "Elements along y");
  run_cmd->add_option("--nelz", nelz, "Elements along z (3D)");
  run_cmd->add_option("--doc", doc, "Degrees of constraint, e.g. tx rz");
  run_cmd->add_option("--dof", dof, "Degrees of freedom, e.g. ty");
  run_cmd->add_option("--emax", emax, "Strain-energy bounds, one per dof");
  run_cmd->add_option("--mode", mode, "base | robust | stress | robust+stress");
  run_cmd->add_option("--eta", eta, "Robust projection threshold");
  run_cmd->add_option("--deta", deta, "Robust threshold offset");
  run_cmd->add_option("--radius", radius, "Filter radius in elements");
  run_cmd->add_option("--sigma-bar", sigma_bar, "Absolute allowable stress");
  run_cmd->add_option("--sigma-bar-factor", sigma_bar_factor, "Allowable stress as a factor of a reference run");
  run_cmd->add_option("--reference", reference, "Reference run report.json for --sigma-bar-factor");
  run_cmd->add_option("--out", out, "Output directory");
  run_cmd->add_option("--threads", threads, "Worker threads (1 is bit-reproducible)");
  run_cmd->add_option("--max-iter", max_iter, "Iteration limit");
  run_cmd->add_flag("--quiet", quiet, "Do not print iteration lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    flexure::RunConfig cfg = config_path.empty() ? flexure::RunConfig{} : flexure::load_config(config_path);
    if (nelx) cfg.nelx = *nelx;
    if (nely) cfg.nely = *nely;
    if (nelz) cfg.nelz = *nelz;
    if (!doc.empty()) cfg.doc = doc;
    if (!dof.empty()) cfg.dof = dof;
    if (!emax.empty()) cfg.emax = emax;
    if (!mode.empty()) {
      const auto m = flexure::parse_variant_mode(mode);
      if (!m) throw flexure::ConfigError("unknown mode '" + mode + "'");
      cfg.variant.mode = *m;
    }
    if (eta) cfg.variant.robust.eta = *eta;
    if (deta) cfg.variant.robust.delta_eta = *deta;
    if (radius) {
      cfg.filter_radius = *radius;
      cfg.variant.robust.filter_radius = *radius;
    }
    if (sigma_bar) cfg.variant.stress.sigma_bar = *sigma_bar;
    if (sigma_bar_factor) cfg.variant.stress.sigma_bar_factor = *sigma_bar_factor;
    if (!reference.empty()) cfg.variant.stress.reference_report = reference;
    if (!out.empty()) cfg.output_dir = out;
    if (threads) cfg.threads = *threads;
    if (max_iter) cfg.termination.max_iterations = std::size_t(*max_iter);

    flexure::SnapshotWriter snapshot;
    if (!cfg.output_dir.empty() && cfg.snapshot_every > 0 && cfg.dim() == 2) {
      const std::filesystem::path dir = std::filesystem::path(cfg.output_dir) / "snapshots";
      std::filesystem::create_directories(dir);
      snapshot = [dir](std::size_t k, const flexure::Mesh& mesh, const flexure::Field& x) {
        char name[32];
        std::snprintf(name, sizeof name, "design_%04zu.pgm", k);
        flexure::export_density(mesh, x, dir / name, flexure::DensityFormat::pgm);
      };
    }

    const auto result = flexure::run(cfg, quiet ? flexure::IterationObserver{} : print_row, snapshot);
    if (!cfg.output_dir.empty()) flexure::export_run(result, cfg.output_dir);

    std::printf("%s after %zu iterations (%s), f = %.6f, Mnd = %.4f\n",
                result.termination.converged ? "converged" : "stopped", result.log.size(),
                flexure::to_string(result.termination.reason), result.objective(), result.non_discreteness);
    return result.termination.converged ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
