#include "emproc/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace emproc {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (allowed.find(key) == allowed.end()) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

std::size_t get_size(const json& j, const std::string& key, std::size_t fallback,
                     const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_unsigned()) {
    throw ConfigError("config: " + where + "." + key +
                      " must be a non-negative integer");
  }
  return j.at(key).get<std::size_t>();
}

std::vector<std::size_t> get_size_list(const json& j, const std::string& key,
                                       const std::string& where) {
  std::vector<std::size_t> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) {
    throw ConfigError("config: " + where + "." + key + " must be an array");
  }
  for (const auto& v : j.at(key)) {
    if (!v.is_number_unsigned()) {
      throw ConfigError("config: " + where + "." + key +
                        " entries must be non-negative integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

ModelSpec parse_model(const json& j) {
  require_keys(j, "model", {"kind", "rho"});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "comonotone") return ModelSpec::comonotone();
  if (kind == "brownian") return ModelSpec::brownian();
  if (kind == "independent") return ModelSpec::independent();
  if (kind == "ou") {
    return ModelSpec::ornstein_uhlenbeck(get_or<double>(j, "rho", 1.0));
  }
  throw ConfigError("config: unknown model kind '" + kind + "'");
}

json dump_model(const ModelSpec& m) {
  json j;
  j["kind"] = m.name();
  if (m.kind == ModelKind::OrnsteinUhlenbeck) j["rho"] = m.ou_scale;
  return j;
}

TimeWeightSpec parse_time_weight(const json& j) {
  require_keys(j, "weights.q", {"kind", "value", "a", "b"});
  const std::string kind = j.at("kind").get<std::string>();
  TimeWeightSpec q;
  if (kind == "constant") {
    q.kind = TimeWeightSpec::Kind::Constant;
    q.a = get_or<double>(j, "value", 1.0);
    q.b = 0.0;
    return q;
  }
  q.a = get_or<double>(j, "a", 0.0);
  q.b = get_or<double>(j, "b", 0.0);
  if (kind == "linear_y") {
    q.kind = TimeWeightSpec::Kind::LinearY;
  } else if (kind == "phi_sin") {
    q.kind = TimeWeightSpec::Kind::PhiSin;
  } else {
    throw ConfigError("config: unknown weight kind '" + kind + "'");
  }
  return q;
}

json dump_time_weight(const TimeWeightSpec& q) {
  json j;
  switch (q.kind) {
    case TimeWeightSpec::Kind::Constant:
      j["kind"] = "constant";
      j["value"] = q.a;
      break;
    case TimeWeightSpec::Kind::LinearY:
      j["kind"] = "linear_y";
      j["a"] = q.a;
      j["b"] = q.b;
      break;
    case TimeWeightSpec::Kind::PhiSin:
      j["kind"] = "phi_sin";
      j["a"] = q.a;
      j["b"] = q.b;
      break;
  }
  return j;
}

LStatSpec parse_lstat(const json& j) {
  require_keys(j, "weights.lstat", {"c", "q0", "z"});
  LStatSpec ls;
  {
    const json& c = j.at("c");
    require_keys(c, "weights.lstat.c", {"kind", "value", "exponent", "scale"});
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "constant") {
      ls.c.kind = ScoreSpec::Kind::Constant;
      ls.c.value = get_or<double>(c, "value", 1.0);
    } else if (kind == "power") {
      ls.c.kind = ScoreSpec::Kind::Power;
      ls.c.exponent = get_or<double>(c, "exponent", 1.0);
      ls.c.scale = get_or<double>(c, "scale", 1.0);
    } else {
      throw ConfigError("config: unknown score kind '" + kind + "'");
    }
  }
  {
    const json& q0 = j.at("q0");
    require_keys(q0, "weights.lstat.q0", {"kind", "value", "bound"});
    const std::string kind = q0.at("kind").get<std::string>();
    if (kind == "constant") {
      ls.q0.kind = BaseWeightSpec::Kind::Constant;
      ls.q0.value = get_or<double>(q0, "value", 1.0);
    } else if (kind == "identity") {
      ls.q0.kind = BaseWeightSpec::Kind::Identity;
      ls.q0.bound = get_or<double>(q0, "bound", 1.0);
    } else {
      throw ConfigError("config: unknown base weight kind '" + kind + "'");
    }
  }
  {
    const json& z = j.at("z");
    require_keys(z, "weights.lstat.z", {"kind", "value", "a", "b"});
    const std::string kind = z.at("kind").get<std::string>();
    if (kind == "none") {
      ls.z.kind = ThresholdSpec::Kind::None;
    } else if (kind == "minus_infinity") {
      ls.z.kind = ThresholdSpec::Kind::MinusInfinity;
    } else if (kind == "constant") {
      ls.z.kind = ThresholdSpec::Kind::Constant;
      ls.z.a = get_or<double>(z, "value", 0.0);
    } else if (kind == "affine") {
      ls.z.kind = ThresholdSpec::Kind::Affine;
      ls.z.a = get_or<double>(z, "a", 0.0);
      ls.z.b = get_or<double>(z, "b", 0.0);
    } else {
      throw ConfigError("config: unknown threshold kind '" + kind + "'");
    }
  }
  return ls;
}

json dump_lstat(const LStatSpec& ls) {
  json j;
  if (ls.c.kind == ScoreSpec::Kind::Constant) {
    j["c"] = {{"kind", "constant"}, {"value", ls.c.value}};
  } else {
    j["c"] = {{"kind", "power"}, {"exponent", ls.c.exponent}, {"scale", ls.c.scale}};
  }
  if (ls.q0.kind == BaseWeightSpec::Kind::Constant) {
    j["q0"] = {{"kind", "constant"}, {"value", ls.q0.value}};
  } else {
    j["q0"] = {{"kind", "identity"}, {"bound", ls.q0.bound}};
  }
  switch (ls.z.kind) {
    case ThresholdSpec::Kind::None: j["z"] = {{"kind", "none"}}; break;
    case ThresholdSpec::Kind::MinusInfinity:
      j["z"] = {{"kind", "minus_infinity"}};
      break;
    case ThresholdSpec::Kind::Constant:
      j["z"] = {{"kind", "constant"}, {"value", ls.z.a}};
      break;
    case ThresholdSpec::Kind::Affine:
      j["z"] = {{"kind", "affine"}, {"a", ls.z.a}, {"b", ls.z.b}};
      break;
  }
  return j;
}

WeightSpec parse_weights(const json& j, const std::string& where) {
  require_keys(j, where, {"q", "lstat"});
  WeightSpec w;
  w.q = parse_time_weight(j.at("q"));
  if (j.contains("lstat")) w.lstat = parse_lstat(j.at("lstat"));
  w.validate();
  return w;
}

json dump_weights(const WeightSpec& w) {
  json j;
  j["q"] = dump_time_weight(w.q);
  if (w.lstat) j["lstat"] = dump_lstat(*w.lstat);
  return j;
}

TimeGrid parse_grid(const json& j) {
  require_keys(j, "grid", {"horizon", "points", "count", "min", "max"});
  const double horizon = j.at("horizon").get<double>();
  if (j.contains("points")) {
    if (j.contains("count") || j.contains("min") || j.contains("max")) {
      throw ConfigError("config: grid takes either points or count/min/max");
    }
    return TimeGrid(j.at("points").get<std::vector<double>>(), horizon);
  }
  if (!(j.contains("count") && j.contains("min") && j.contains("max"))) {
    throw ConfigError("config: grid needs points or count/min/max");
  }
  return TimeGrid::linspace(j.at("count").get<std::size_t>(),
                            j.at("min").get<double>(),
                            j.at("max").get<double>(), horizon);
}

json dump_grid(const TimeGrid& grid) {
  json j;
  j["horizon"] = grid.horizon();
  j["points"] = std::vector<double>(grid.points().begin(), grid.points().end());
  return j;
}

const std::set<std::string> kKnownChecks = {
    "mean",       "variance", "covariance", "combined_covariance",
    "cross_pilot", "paired",  "fdd",        "remainder",
    "bridge",     "tightness", "lstat",     "constants",
    "rank_sum"};

CheckSpec parse_check(const json& j) {
  require_keys(j, "check",
               {"name", "z_max", "bias_slack", "mean_abs_z_max", "times",
                "coefficients", "p_min", "max_ratio", "zero_tol", "expect_zero",
                "copula", "rho", "bridge_n", "bridge_R", "lattice", "sup_tol",
                "bk_ladder", "bk_R", "delta", "condition_r", "refined_count",
                "exponent_match_tol", "columns", "n_min", "n_max",
                "identity_tol", "tol_c2", "tol_mean"});
  CheckSpec c;
  c.name = j.at("name").get<std::string>();
  if (kKnownChecks.find(c.name) == kKnownChecks.end()) {
    throw ConfigError("config: unknown check name '" + c.name + "'");
  }
  c.z_max = get_or<double>(j, "z_max", c.z_max);
  if (j.contains("bias_slack")) c.bias_slack = j.at("bias_slack").get<double>();
  c.mean_abs_z_max = get_or<double>(j, "mean_abs_z_max", c.mean_abs_z_max);
  c.times = get_or<std::vector<double>>(j, "times", {});
  if (j.contains("coefficients")) {
    c.coefficients = j.at("coefficients").get<std::vector<std::vector<double>>>();
  }
  c.p_min = get_or<double>(j, "p_min", c.p_min);
  c.max_ratio = get_or<double>(j, "max_ratio", c.max_ratio);
  c.zero_tol = get_or<double>(j, "zero_tol", c.zero_tol);
  c.expect_zero = get_or<bool>(j, "expect_zero", c.expect_zero);
  c.copula = get_or<std::string>(j, "copula", c.copula);
  c.rho = get_or<double>(j, "rho", c.rho);
  c.bridge_n = get_size(j, "bridge_n", c.bridge_n, "check");
  c.bridge_R = get_size(j, "bridge_R", c.bridge_R, "check");
  c.lattice = get_size(j, "lattice", c.lattice, "check");
  c.sup_tol = get_or<double>(j, "sup_tol", c.sup_tol);
  c.bk_ladder = get_size_list(j, "bk_ladder", "check");
  c.bk_r = get_size(j, "bk_R", c.bk_r, "check");
  c.delta = get_or<double>(j, "delta", c.delta);
  c.condition_r = get_or<double>(j, "condition_r", c.condition_r);
  c.refined_count = get_size(j, "refined_count", c.refined_count, "check");
  c.exponent_match_tol =
      get_or<double>(j, "exponent_match_tol", c.exponent_match_tol);
  c.columns = get_size(j, "columns", c.columns, "check");
  c.n_min = get_size(j, "n_min", c.n_min, "check");
  c.n_max = get_size(j, "n_max", c.n_max, "check");
  c.identity_tol = get_or<double>(j, "identity_tol", c.identity_tol);
  c.tol_c2 = get_or<double>(j, "tol_c2", c.tol_c2);
  c.tol_mean = get_or<double>(j, "tol_mean", c.tol_mean);
  return c;
}

json dump_check(const CheckSpec& c) {
  const CheckSpec defaults{};
  json j;
  j["name"] = c.name;
  if (c.z_max != defaults.z_max) j["z_max"] = c.z_max;
  if (c.bias_slack) j["bias_slack"] = *c.bias_slack;
  if (c.mean_abs_z_max != defaults.mean_abs_z_max) j["mean_abs_z_max"] = c.mean_abs_z_max;
  if (!c.times.empty()) j["times"] = c.times;
  if (!c.coefficients.empty()) j["coefficients"] = c.coefficients;
  if (c.p_min != defaults.p_min) j["p_min"] = c.p_min;
  if (c.max_ratio != defaults.max_ratio) j["max_ratio"] = c.max_ratio;
  if (c.zero_tol != defaults.zero_tol) j["zero_tol"] = c.zero_tol;
  if (c.expect_zero != defaults.expect_zero) j["expect_zero"] = c.expect_zero;
  if (c.copula != defaults.copula) j["copula"] = c.copula;
  if (c.rho != defaults.rho) j["rho"] = c.rho;
  if (c.bridge_n != defaults.bridge_n) j["bridge_n"] = c.bridge_n;
  if (c.bridge_R != defaults.bridge_R) j["bridge_R"] = c.bridge_R;
  if (c.lattice != defaults.lattice) j["lattice"] = c.lattice;
  if (c.sup_tol != defaults.sup_tol) j["sup_tol"] = c.sup_tol;
  if (!c.bk_ladder.empty()) j["bk_ladder"] = c.bk_ladder;
  if (c.bk_r != defaults.bk_r) j["bk_R"] = c.bk_r;
  if (c.delta != defaults.delta) j["delta"] = c.delta;
  if (c.condition_r != defaults.condition_r) j["condition_r"] = c.condition_r;
  if (c.refined_count != defaults.refined_count) j["refined_count"] = c.refined_count;
  if (c.exponent_match_tol != defaults.exponent_match_tol) {
    j["exponent_match_tol"] = c.exponent_match_tol;
  }
  if (c.columns != defaults.columns) j["columns"] = c.columns;
  if (c.n_min != defaults.n_min) j["n_min"] = c.n_min;
  if (c.n_max != defaults.n_max) j["n_max"] = c.n_max;
  if (c.identity_tol != defaults.identity_tol) j["identity_tol"] = c.identity_tol;
  if (c.tol_c2 != defaults.tol_c2) j["tol_c2"] = c.tol_c2;
  if (c.tol_mean != defaults.tol_mean) j["tol_mean"] = c.tol_mean;
  return j;
}

}  // namespace

const ModelSpec& ExperimentConfig::model_or_throw() const {
  if (!model) throw ConfigError("config: missing model block");
  return *model;
}
const WeightSpec& ExperimentConfig::weights_or_throw() const {
  if (!weights) throw ConfigError("config: missing weights block");
  return *weights;
}
const TimeGrid& ExperimentConfig::grid_or_throw() const {
  if (!grid) throw ConfigError("config: missing grid block");
  return *grid;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  require_keys(j, "config",
               {"model", "weights", "weights2", "grid", "run", "oracle",
                "checks", "output"});
  ExperimentConfig cfg;
  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("weights")) cfg.weights = parse_weights(j.at("weights"), "weights");
  if (j.contains("weights2")) cfg.weights2 = parse_weights(j.at("weights2"), "weights2");
  if (j.contains("grid")) cfg.grid = parse_grid(j.at("grid"));
  if (j.contains("run")) {
    const json& r = j.at("run");
    require_keys(r, "run", {"n", "R", "seed", "n_ladder", "decay_R"});
    if (r.contains("n")) {
      if (!r.at("n").is_number_unsigned()) {
        throw ConfigError("config: run.n must be a positive integer");
      }
      cfg.run.n = r.at("n").get<std::size_t>();
      if (cfg.run.n < 1) throw ConfigError("config: run.n must be >= 1");
    }
    if (r.contains("R")) {
      if (!r.at("R").is_number_unsigned()) {
        throw ConfigError("config: run.R must be a positive integer");
      }
      cfg.run.R = r.at("R").get<std::size_t>();
    }
    if (r.contains("seed")) {
      if (!r.at("seed").is_number_unsigned()) {
        throw ConfigError("config: run.seed must be a non-negative integer");
      }
      cfg.run.seed = r.at("seed").get<std::uint64_t>();
    }
    cfg.run.n_ladder = get_size_list(r, "n_ladder", "run");
    cfg.run.decay_R = get_size(r, "decay_R", cfg.run.decay_R, "run");
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    require_keys(o, "oracle", {"tol_1d", "tol_2d"});
    cfg.oracle.tol_1d = get_or<double>(o, "tol_1d", cfg.oracle.tol_1d);
    cfg.oracle.tol_2d = get_or<double>(o, "tol_2d", cfg.oracle.tol_2d);
  }
  if (j.contains("checks")) {
    if (!j.at("checks").is_array()) throw ConfigError("config: checks must be an array");
    for (const auto& c : j.at("checks")) cfg.checks.push_back(parse_check(c));
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    require_keys(o, "output", {"directory", "formats"});
    cfg.output.directory = get_or<std::string>(o, "directory", cfg.output.directory);
    if (o.contains("formats")) {
      cfg.output.csv = false;
      cfg.output.json = false;
      for (const auto& f : o.at("formats")) {
        const std::string fmt = f.get<std::string>();
        if (fmt == "csv") {
          cfg.output.csv = true;
        } else if (fmt == "json") {
          cfg.output.json = true;
        } else {
          throw ConfigError("config: unknown output format '" + fmt + "'");
        }
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  if (cfg.model) j["model"] = dump_model(*cfg.model);
  if (cfg.weights) j["weights"] = dump_weights(*cfg.weights);
  if (cfg.weights2) j["weights2"] = dump_weights(*cfg.weights2);
  if (cfg.grid) j["grid"] = dump_grid(*cfg.grid);
  {
    json r;
    r["n"] = cfg.run.n;
    r["R"] = cfg.run.R;
    r["seed"] = cfg.run.seed;
    if (!cfg.run.n_ladder.empty()) r["n_ladder"] = cfg.run.n_ladder;
    const RunBlock defaults{};
    if (cfg.run.decay_R != defaults.decay_R) r["decay_R"] = cfg.run.decay_R;
    j["run"] = r;
  }
  {
    const OracleBlock defaults{};
    if (!(cfg.oracle == defaults)) {
      j["oracle"] = {{"tol_1d", cfg.oracle.tol_1d}, {"tol_2d", cfg.oracle.tol_2d}};
    }
  }
  if (!cfg.checks.empty()) {
    json arr = json::array();
    for (const auto& c : cfg.checks) arr.push_back(dump_check(c));
    j["checks"] = arr;
  }
  {
    json o;
    o["directory"] = cfg.output.directory;
    std::vector<std::string> formats;
    if (cfg.output.csv) formats.push_back("csv");
    if (cfg.output.json) formats.push_back("json");
    o["formats"] = formats;
    j["output"] = o;
  }
  return j.dump(2);
}

std::string config_digest(const ExperimentConfig& config) {
  // The digest identifies the experiment; where and in which formats reports
  // land is presentation, so the output block is excluded.
  ExperimentConfig canonical_cfg = config;
  canonical_cfg.output = OutputBlock{};
  const std::string canonical = serialize_config(canonical_cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace emproc
