#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "halfspace/harness.hpp"

using namespace halfspace;

int main(int argc, char** argv) {
  CLI::App app{"Spectral experiments for first-order elliptic systems on the periodic half-space"};
  std::string experiment, variant, config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid, dim;
  std::optional<double> tol_scale;
  bool quiet = false;

  app.add_option("experiment", experiment,
                 "accretivity | quadratic | calderon | nt-max | nt-sharp | bvp | layers | oracle | sweep | calculus | "
                 "offdiag");
  app.add_option("variant", variant, "bvp: regularity|neumann|dirichlet, layers: jump|duality|representation, "
                                     "oracle: laplacian|block|one-d, sweep: aperture|perturbation, "
                                     "calculus: paths|identities|intertwining");
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", out, "report path (overrides the config)");
  app.add_option("--seed", seed, "seed for every random probe");
  app.add_option("--grid", grid, "points per axis (power of two >= 8)");
  app.add_option("--dim", dim, "boundary dimension")->check(CLI::IsMember({1, 2}));
  app.add_option("--tolerance-scale", tol_scale, "multiplies every check tolerance")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "only the exit code and report");
  CLI11_PARSE(app, argc, argv);

  harness::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = harness::ExperimentConfig::load(config_path);
    if (!experiment.empty()) cfg.experiment = experiment;
    if (!variant.empty()) cfg.variant = variant;
    if (!out.empty()) cfg.output = out;
    if (seed) cfg.seed = *seed;
    if (tol_scale) cfg.tolerance_scale = *tol_scale;
    if (grid || dim) cfg.grid = GridSpec(dim.value_or(cfg.grid.n), grid.value_or(cfg.grid.G), cfg.grid.m);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const auto report = harness::run_experiment(cfg);
  try {
    report.write(cfg.output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!quiet) {
    for (const auto& c : report.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << (c.lower ? " in [" : " <= ")
                << (c.lower ? std::to_string(*c.lower) + ", " : "") << c.bound << (c.lower ? "]" : "") << "\n";
    if (!report.error.empty()) std::cout << "ERROR " << report.error << "\n";
    std::cout << (report.passed() ? "all checks passed" : "some checks failed") << "; report written to "
              << cfg.output << "\n";
  }
  return report.passed() ? 0 : 1;
}
