#include <map>
#include <vector>

#include "emproc/runner.hpp"

namespace emproc {

namespace {

struct Fixture {
  const char* criterion;
  const char* description;
  std::vector<const char*> configs;
};

// The bundled gate: each criterion is encoded as one or two experiment
// configs with pinned seeds and tolerances. Seeds were piloted once and
// frozen; a seed is only ever re-rolled (documented here) if a platform's
// floating-point environment shifts a borderline statistic, and the roll is
// limited to one alternate value.
const char* kRankSum = R"json({
  "model": {"kind": "comonotone"},
  "weights": {"q": {"kind": "constant", "value": 1.0}},
  "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
  "run": {"n": 100, "R": 2, "seed": 1001},
  "checks": [{"name": "rank_sum", "columns": 1000, "n_min": 2, "n_max": 200,
              "identity_tol": 1e-12}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kConstants = R"json({
  "model": {"kind": "comonotone"},
  "weights": {"q": {"kind": "constant", "value": 1.0}},
  "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
  "run": {"n": 100, "R": 2, "seed": 1002},
  "checks": [{"name": "constants", "tol_c2": 1e-8, "tol_mean": 1e-9}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kVariance = R"json({
  "model": {"kind": "comonotone"},
  "weights": {"q": {"kind": "constant", "value": 1.0}},
  "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
  "run": {"n": 1000, "R": 10000, "seed": 2003},
  "checks": [{"name": "variance"}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kCovariance = R"json({
  "model": {"kind": "ou", "rho": 1.0},
  "weights": {"q": {"kind": "phi_sin", "a": 1.0, "b": 0.5}},
  "grid": {"horizon": 2.0, "points": [0.4, 0.7, 1.0, 1.3, 1.6]},
  "run": {"n": 500, "R": 10000, "seed": 2004},
  "checks": [{"name": "covariance", "mean_abs_z_max": 2.0}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kCombined = R"json({
  "model": {"kind": "ou", "rho": 1.0},
  "weights": {"q": {"kind": "constant", "value": 1.0},
              "lstat": {"c": {"kind": "power", "exponent": 2.0, "scale": 1.0},
                         "q0": {"kind": "constant", "value": 1.0},
                         "z": {"kind": "none"}}},
  "grid": {"horizon": 2.0, "points": [0.4, 0.7, 1.0, 1.3, 1.6]},
  "run": {"n": 500, "R": 10000, "seed": 2005},
  "checks": [{"name": "cross_pilot"},
             {"name": "combined_covariance", "mean_abs_z_max": 2.0}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kPaired = R"json({
  "model": {"kind": "ou", "rho": 1.0},
  "weights": {"q": {"kind": "phi_sin", "a": 1.0, "b": 0.5}},
  "weights2": {"q": {"kind": "phi_sin", "a": 2.0, "b": 1.0}},
  "grid": {"horizon": 2.0, "points": [0.4, 0.7, 1.0, 1.3, 1.6]},
  "run": {"n": 500, "R": 10000, "seed": 2006},
  "checks": [{"name": "paired", "mean_abs_z_max": 2.0}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kFdd = R"json({
  "model": {"kind": "ou", "rho": 1.0},
  "weights": {"q": {"kind": "constant", "value": 1.0}},
  "grid": {"horizon": 2.0, "points": [0.6, 1.2]},
  "run": {"n": 2000, "R": 5000, "seed": 2007},
  "checks": [{"name": "fdd", "times": [0.6, 1.2],
              "coefficients": [[1.0, -1.0], [1.0, 1.0]], "p_min": 0.01}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kRemainderQuadratic = R"json({
  "model": {"kind": "comonotone"},
  "weights": {"q": {"kind": "constant", "value": 1.0},
              "lstat": {"c": {"kind": "power", "exponent": 2.0, "scale": 1.0},
                         "q0": {"kind": "constant", "value": 1.0},
                         "z": {"kind": "none"}}},
  "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
  "run": {"n": 100, "R": 2, "seed": 2008, "n_ladder": [250, 1000, 4000],
           "decay_R": 200},
  "checks": [{"name": "remainder", "max_ratio": 0.7}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kRemainderConstant = R"json({
  "model": {"kind": "comonotone"},
  "weights": {"q": {"kind": "constant", "value": 1.0},
              "lstat": {"c": {"kind": "constant", "value": 1.0},
                         "q0": {"kind": "constant", "value": 1.0},
                         "z": {"kind": "none"}}},
  "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
  "run": {"n": 100, "R": 2, "seed": 2008, "n_ladder": [250, 1000, 4000],
           "decay_R": 200},
  "checks": [{"name": "remainder", "expect_zero": true, "zero_tol": 1e-10}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kBridge = R"json({
  "run": {"n": 100, "R": 2, "seed": 2009},
  "checks": [{"name": "bridge", "copula": "independent", "bridge_n": 2000,
              "bridge_R": 2000, "lattice": 15, "sup_tol": 0.02,
              "bk_ladder": [500, 2000, 8000], "bk_R": 300},
             {"name": "bridge", "copula": "comonotone", "bridge_n": 2000,
              "bridge_R": 2000, "lattice": 15, "sup_tol": 0.02}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const char* kTightness = R"json({
  "model": {"kind": "ou", "rho": 1.0},
  "weights": {"q": {"kind": "constant", "value": 1.0}},
  "grid": {"horizon": 2.0, "count": 20, "min": 0.5, "max": 1.5},
  "run": {"n": 100, "R": 2, "seed": 2010},
  "checks": [{"name": "tightness", "delta": 0.3, "condition_r": 0.0,
              "refined_count": 41, "exponent_match_tol": 0.05}],
  "output": {"directory": "out", "formats": ["csv", "json"]}
})json";

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> kFixtures = {
      {"c01_rank_sum",
       "exact rank-sum identity over 1000 random tie-free columns",
       {kRankSum}},
      {"c02_constants",
       "closed-form oracle constants: c2=1/3, diagonal 1/12, mean 1/2",
       {kConstants}},
      {"c03_variance",
       "unit-weight variance 1/12 at n=1000, R=10000 within 4SE + 2/n",
       {kVariance}},
      {"c04_covariance",
       "OU covariance surface, bounded time-dependent weight, 15 cells",
       {kCovariance}},
      {"c05_combined",
       "combined-process covariance decomposition with MC-piloted cross term",
       {kCombined}},
      {"c06_paired",
       "paired processes: cross covariance vs oracle and bilinearity",
       {kPaired}},
      {"c07_fdd",
       "linear-combination normality, seed-pinned KS p > 0.01",
       {kFdd}},
      {"c08_remainder",
       "expansion remainder decays along the n ladder; constant score is exact",
       {kRemainderQuadratic, kRemainderConstant}},
      {"c09_bridge",
       "bivariate quantile processes match Brownian-bridge covariances",
       {kBridge}},
      {"c10_tightness",
       "increment-variance scan consistent across grid resolutions",
       {kTightness}},
  };
  return kFixtures;
}

}  // namespace

std::vector<std::string> acceptance_criteria() {
  std::vector<std::string> names;
  for (const auto& f : fixtures()) names.push_back(f.criterion);
  return names;
}

std::string acceptance_description(const std::string& criterion) {
  for (const auto& f : fixtures()) {
    if (criterion == f.criterion) return f.description;
  }
  throw ConfigError("unknown acceptance criterion '" + criterion + "'");
}

ExperimentConfig acceptance_config(const std::string& criterion) {
  for (const auto& f : fixtures()) {
    if (criterion == f.criterion) return parse_config(f.configs.front());
  }
  throw ConfigError("unknown acceptance criterion '" + criterion + "'");
}

std::vector<AcceptanceOutcome> run_acceptance(int workers,
                                              const std::string& out_dir) {
  std::vector<AcceptanceOutcome> outcomes;
  for (const auto& f : fixtures()) {
    AcceptanceOutcome outcome;
    outcome.criterion = f.criterion;
    outcome.description = f.description;
    outcome.pass = true;
    for (std::size_t k = 0; k < f.configs.size(); ++k) {
      const ExperimentConfig config = parse_config(f.configs[k]);
      const RunResult result = run_checks(config, workers);
      outcome.pass = outcome.pass && result.pass;
      for (const auto& check : result.checks) {
        if (!check.pass) {
          outcome.notes.push_back(check.name + " failed");
          for (const auto& note : check.notes) outcome.notes.push_back(note);
        }
      }
      if (!out_dir.empty()) {
        std::string dir = out_dir + "/" + f.criterion;
        if (f.configs.size() > 1) dir += "_" + std::to_string(k + 1);
        write_reports(config, result, dir, "verify");
      }
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace emproc
