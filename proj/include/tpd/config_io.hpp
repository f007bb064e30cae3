#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "tpd/circuit.hpp"
#include "tpd/jpm.hpp"
#include "tpd/metrics.hpp"

namespace tpd {

using Json = nlohmann::json;

// Strict configuration loading: unknown keys and malformed values are
// reported with their JSON path and raise ConfigError.
Json load_config(const std::filesystem::path& file);
void reject_unknown_keys(const Json& object, std::initializer_list<const char*> allowed,
                         const std::string& where);

ResonatorSpec parse_resonator(const Json& object, const std::string& where);
CouplerSpec parse_coupler(const Json& object, const std::string& where);
JpmSpec parse_jpm(const Json& object, const std::string& where);
ModelParams parse_model(const Json& object, const std::string& where);
HilbertSpace parse_space(const Json& object, const std::string& where);
SweepSpec parse_sweep_config(const Json& root);

// Deterministic number formatting shared by every CSV/JSON writer.
std::string format_number(double value);

namespace cli {

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  int threads = 0;
  double tol_rel = 1e-8;
  double tol_abs = 1e-10;
};

// Subcommand bodies; each writes its machine-readable outputs under
// out_dir and returns the CLI exit code contract (0 ok; config errors throw
// ConfigError before any file is written, numerical errors propagate).
void run_coupler(const RunOptions& options);
void run_jpm(const RunOptions& options);
void run_simulate(const RunOptions& options);
void run_sweep(const RunOptions& options);
void run_tables(const RunOptions& options);  // built-in recipe when config empty

}  // namespace cli

}  // namespace tpd
