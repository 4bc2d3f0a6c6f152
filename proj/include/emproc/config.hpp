#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emproc/model.hpp"
#include "emproc/time_grid.hpp"
#include "emproc/weights.hpp"

namespace emproc {

// One named check. Every name maps to exactly one lab or oracle operation;
// unknown names and unknown keys are configuration errors (strict parsing:
// a silently ignored tolerance would invalidate the experiment).
struct CheckSpec {
  std::string name;

  // Moment-report tolerances.
  double z_max = 4.0;
  std::optional<double> bias_slack;  // defaults to 2/n at run time
  double mean_abs_z_max = 0.0;       // 0 disables the drift rule

  // fdd
  std::vector<double> times;
  std::vector<std::vector<double>> coefficients;
  double p_min = 0.01;

  // remainder
  double max_ratio = 0.7;
  double zero_tol = 1e-10;
  bool expect_zero = false;

  // bridge
  std::string copula = "independent";
  double rho = 0.0;
  std::size_t bridge_n = 2000;
  std::size_t bridge_R = 2000;
  std::size_t lattice = 9;
  double sup_tol = 0.02;
  std::vector<std::size_t> bk_ladder;
  std::size_t bk_r = 300;

  // tightness
  double delta = 0.3;
  double condition_r = 0.0;
  std::size_t refined_count = 41;
  double exponent_match_tol = 0.05;

  // rank_sum
  std::size_t columns = 1000;
  std::size_t n_min = 2;
  std::size_t n_max = 200;
  double identity_tol = 1e-12;

  // constants
  double tol_c2 = 1e-8;
  double tol_mean = 1e-9;

  bool operator==(const CheckSpec&) const = default;
};

struct RunBlock {
  std::size_t n = 1000;
  std::size_t R = 1000;
  std::uint64_t seed = 1;
  std::vector<std::size_t> n_ladder;
  std::size_t decay_R = 200;
  bool operator==(const RunBlock&) const = default;
};

struct OutputBlock {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
  bool operator==(const OutputBlock&) const = default;
};

struct OracleBlock {
  double tol_1d = 1e-9;
  double tol_2d = 1e-8;
  bool operator==(const OracleBlock&) const = default;
};

struct ExperimentConfig {
  std::optional<ModelSpec> model;
  std::optional<WeightSpec> weights;
  std::optional<WeightSpec> weights2;
  std::optional<TimeGrid> grid;
  RunBlock run;
  OracleBlock oracle;
  std::vector<CheckSpec> checks;
  OutputBlock output;

  bool operator==(const ExperimentConfig&) const = default;

  const ModelSpec& model_or_throw() const;
  const WeightSpec& weights_or_throw() const;
  const TimeGrid& grid_or_throw() const;
};

// Strict JSON parsing: unknown keys anywhere are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a over the canonical serialization; identifies an experiment in every
// report file.
std::string config_digest(const ExperimentConfig& config);

}  // namespace emproc
