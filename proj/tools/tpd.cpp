#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "tpd/config_io.hpp"

// Batch front end: every subcommand reads one JSON config and writes its
// results as CSV/JSON files under --out. Exit codes: 0 success, 2 bad
// configuration, 3 numerical failure.
int main(int argc, char** argv) {
  CLI::App app{"two-photon detector simulation toolkit"};
  app.require_subcommand(1);

  tpd::cli::RunOptions options;
  options.out_dir = ".";

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    cmd->add_option("--config", options.config, "JSON configuration file")
        ->required(config_required);
    cmd->add_option("--out", options.out_dir, "output directory");
    cmd->add_option("--threads", options.threads, "worker threads (0 = all cores)");
    cmd->add_option("--tol-rel", options.tol_rel, "integrator relative tolerance");
    cmd->add_option("--tol-abs", options.tol_abs, "integrator absolute tolerance");
  };

  add_common(app.add_subcommand("coupler", "flux maps and derived couplings"), true);
  add_common(app.add_subcommand("jpm", "detector spectrum, rates and dephasing"), true);
  add_common(app.add_subcommand("simulate", "one master-equation evolution"), true);
  add_common(app.add_subcommand("sweep", "fidelity maps over parameter grids"), true);
  add_common(app.add_subcommand("tables", "regenerate the reference tables"), false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("coupler")) tpd::cli::run_coupler(options);
    if (app.got_subcommand("jpm")) tpd::cli::run_jpm(options);
    if (app.got_subcommand("simulate")) tpd::cli::run_simulate(options);
    if (app.got_subcommand("sweep")) tpd::cli::run_sweep(options);
    if (app.got_subcommand("tables")) tpd::cli::run_tables(options);
  } catch (const tpd::ConfigError& err) {
    std::fprintf(stderr, "configuration error: %s\n", err.what());
    return 2;
  } catch (const nlohmann::json::exception& err) {
    std::fprintf(stderr, "configuration error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 3;
  }
  return 0;
}
