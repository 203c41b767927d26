#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wasep::harness {

/// Used when a configuration does not set `seed`.
inline constexpr std::uint64_t default_seed = 12345;

std::string version();

struct ExperimentConfig {
  std::string kind;  // equilibrium | hydro | kpz | burgers | kernel-audit | coupled
  std::vector<int> N;
  double alpha = 0.5;
  std::size_t replicas = 1;
  std::uint64_t seed = default_seed;
  bool seed_defaulted = true;
  std::string out = "run";
  unsigned threads = 0;  // 0: WASEP_THREADS or the hardware count

  std::vector<double> times;   // macro times (hydro, kpz, burgers, kernel-audit, coupled)
  int cells = 16;              // hydro bins or Burgers grid size
  std::string initial = "flat";  // flat | step | step-right
  std::vector<double> points;  // equilibrium evaluation grid
  std::vector<double> eps;     // kernel-audit and kpz window margins
  std::vector<double> c;       // coupled reservoir densities
  std::string boundary = "zero-flux";  // zero-flux | dirichlet-bln
  double mshe_dx = 0.05;
  std::size_t mshe_replicas = 2000;
  bool check_every_event = false;

  /// Canonical key=value text, one key per line in schema order.
  std::string resolved() const;
  nlohmann::ordered_json to_json() const;
};

struct ConfigError {
  std::string origin;  // "line 3", "--seed", or "default"
  std::string key;
  std::string message;
  std::string to_string() const;
};

/// A value given outside the file, e.g. a command-line flag.
struct Override {
  std::string key;
  std::string value;
  std::string origin;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return config.has_value(); }
};

/// key=value lines, '#' starts a comment. Overrides are applied after the
/// file. `kind` fills in a missing kind= line and must agree with one that
/// is present. Every violation is collected; no partial config is returned.
ParseResult parse_config(std::string_view text, const std::vector<Override>& overrides = {},
                         std::string_view kind = {});

struct CsvFile {
  std::string name;
  std::string text;
};

struct RunReport {
  nlohmann::ordered_json results;
  std::vector<CsvFile> csv;
  /// Runtime assertions that did not hold; a nonempty list means exit 3.
  std::vector<std::string> failures;
};

RunReport run_equilibrium_study(const ExperimentConfig& cfg);
RunReport run_hydro_comparison(const ExperimentConfig& cfg);
RunReport run_kpz_study(const ExperimentConfig& cfg);
RunReport run_burgers(const ExperimentConfig& cfg);
RunReport run_kernel_audit(const ExperimentConfig& cfg);
RunReport run_coupled_study(const ExperimentConfig& cfg);

/// Dispatches on cfg.kind.
RunReport run_experiment(const ExperimentConfig& cfg);

/// report.json: version, resolved config and results.
std::string report_json(const ExperimentConfig& cfg, const RunReport& rep);

/// Writes config.resolved, report.json, the CSVs and meta.json (the only
/// file with a timestamp) into dir.
void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunReport& rep,
               double wall_seconds);

}  // namespace wasep::harness
