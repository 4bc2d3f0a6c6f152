#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emproc/config.hpp"

namespace emproc {

inline constexpr const char* kVersion = "0.1.0";

struct CheckResult {
  std::string name;       // instance name, unique within a run
  std::string operation;  // which lab/oracle operation backs it
  bool pass = false;
  bool degenerate = false;  // notice: check skipped as degenerate, not failed
  std::vector<std::string> notes;
  std::string json_text;  // full report payload
  std::string csv_text;   // flat table payload
};

struct RunResult {
  std::string digest;
  bool pass = true;
  std::uint64_t rng_draws = 0;
  std::vector<CheckResult> checks;
};

// Executes the configured checks (subcommand "verify"), or the named subset
// for the single-purpose subcommands ("bridge", "lstat", "tightness").
RunResult run_checks(const ExperimentConfig& config, int workers,
                     const std::optional<std::string>& only_name = {});

// Oracle-only run: covariance surfaces and per-time limits, zero RNG draws.
RunResult run_oracle(const ExperimentConfig& config, int workers);

// Simulation-only run: ensemble moment estimates without oracle pairing.
RunResult run_simulate(const ExperimentConfig& config, int workers);

// Human-readable resolved plan; pure function of the config.
std::string describe(const ExperimentConfig& config);

// Writes per-check reports plus summary.json under `directory`; file bytes
// are a pure function of (config, results).
void write_reports(const ExperimentConfig& config, const RunResult& result,
                   const std::string& directory, const std::string& subcommand);

// Bundled acceptance fixtures (the verify --all gate).
std::vector<std::string> acceptance_criteria();
ExperimentConfig acceptance_config(const std::string& criterion);
std::string acceptance_description(const std::string& criterion);

struct AcceptanceOutcome {
  std::string criterion;
  std::string description;
  bool pass = false;
  std::vector<std::string> notes;
};

// Runs criteria in order, writing per-criterion reports under out_dir when
// non-empty; returns one outcome per criterion.
std::vector<AcceptanceOutcome> run_acceptance(int workers,
                                              const std::string& out_dir);

}  // namespace emproc
