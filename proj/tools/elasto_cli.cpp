// Command-line front end: simulate | scatter | rigidity | check.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "elasto/app.hpp"

#ifdef ELASTO_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

void apply_thread_cap() {
  const char* env = std::getenv("ELASTO_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw elasto::ConfigError(std::string("ELASTO_THREADS must be a positive integer, got '") + env + "'");
#ifdef ELASTO_HAVE_OPENMP
  omp_set_num_threads(int(n));
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudospectral solver and diagnostics for quasilinear elastic waves"};
  app.require_subcommand(1);

  std::string config_path, output_dir, resume_path;
  auto* simulate = app.add_subcommand("simulate", "Integrate the configured run and write diagnostics.csv");
  auto* scatter = app.add_subcommand("scatter", "Run with the split and extract scattering data, radiation field and freeness");
  auto* rigidity = app.add_subcommand("rigidity", "Run and evaluate the flux identity and the rigidity inequality");
  auto* check = app.add_subcommand("check", "Run the built-in invariant suite");
  for (auto* sc : {simulate, scatter, rigidity}) {
    sc->add_option("--config", config_path, "key=value configuration file")->required()->check(CLI::ExistingFile);
    sc->add_option("--output-dir", output_dir, "Output directory (overrides output_dir in the config)");
  }
  simulate->add_option("--resume", resume_path, "Continue from a state snapshot of this run")->check(CLI::ExistingFile);
  check->add_option("--config", config_path, "Configuration whose seed drives the random fields")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? elasto::kExitOk : elasto::kExitConfig;
  }

  try {
    apply_thread_cap();
    elasto::RunConfig cfg;
    if (!config_path.empty()) cfg = elasto::load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    const std::filesystem::path out = cfg.output_dir;

    if (check->parsed()) return elasto::run_check(cfg.seed, std::cout) ? elasto::kExitOk : elasto::kExitFailure;
    if (simulate->parsed()) {
      std::optional<std::filesystem::path> resume;
      if (!resume_path.empty()) resume = resume_path;
      elasto::run_simulate(cfg, out, std::cout, resume);
    } else if (scatter->parsed()) {
      elasto::run_scatter(cfg, out, std::cout);
    } else if (rigidity->parsed()) {
      elasto::run_rigidity(cfg, out, std::cout);
    }
    return elasto::kExitOk;
  } catch (const elasto::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return elasto::kExitConfig;
  } catch (const elasto::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return elasto::kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return elasto::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return elasto::kExitFailure;
  }
}
