#include "emproc/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "emproc/empirical.hpp"
#include "emproc/mc.hpp"
#include "emproc/oracle.hpp"
#include "emproc/pairwise.hpp"
#include "emproc/rng.hpp"
#include "emproc/stats.hpp"

namespace emproc {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

std::string moment_csv(const mc::MomentReport& report, std::size_t n,
                       std::size_t R, std::uint64_t seed) {
  std::ostringstream os;
  os << "t,s,statistic,mc,se,oracle,z,n,R,seed\n";
  for (const auto& cell : report.cells) {
    os << fmt(cell.t) << ',' << fmt(cell.s) << ',' << cell.statistic << ','
       << fmt(cell.mc) << ',' << fmt(cell.se) << ',' << fmt(cell.oracle) << ','
       << fmt(cell.z) << ',' << n << ',' << R << ',' << seed << '\n';
  }
  return os.str();
}

json moment_json(const mc::MomentReport& report) {
  json cells = json::array();
  for (const auto& cell : report.cells) {
    cells.push_back({{"t", cell.t},
                     {"s", cell.s},
                     {"statistic", cell.statistic},
                     {"mc", cell.mc},
                     {"se", cell.se},
                     {"oracle", cell.oracle},
                     {"z", cell.z},
                     {"bias", cell.bias},
                     {"pass", cell.pass}});
  }
  return json{{"target", report.target},
              {"cells", cells},
              {"mean_abs_z_adjusted", report.mean_abs_z_adjusted},
              {"mean_abs_z_raw", report.mean_abs_z_raw},
              {"notes", report.notes},
              {"pass", report.pass}};
}

struct CheckContext {
  CheckContext(const ExperimentConfig& config, int worker_count)
      : cfg(config), workers(worker_count), digest(config_digest(config)) {}

  const ExperimentConfig& cfg;
  int workers;
  std::string digest;
  std::uint64_t draws = 0;

  std::optional<mc::Ensemble> ensemble;
  std::optional<oracle::Engine> direct_engine;
  std::optional<oracle::Engine> expansion_engine;
  std::optional<oracle::Engine> second_engine;

  oracle::QuadratureOptions quad() const {
    return {cfg.oracle.tol_1d, cfg.oracle.tol_2d};
  }

  mc::EnsembleNeeds union_needs() const {
    mc::EnsembleNeeds needs;
    for (const auto& c : cfg.checks) {
      if (c.name == "combined_covariance") needs.gamma = true;
      if (c.name == "cross_pilot") {
        needs.alpha = true;
        needs.gamma = true;
      }
      if (c.name == "paired") needs.paired = true;
      if (c.name == "lstat") needs.lstat = true;
    }
    return needs;
  }

  static bool uses_main_ensemble(const std::string& name) {
    return name == "mean" || name == "variance" || name == "covariance" ||
           name == "combined_covariance" || name == "cross_pilot" ||
           name == "paired" || name == "fdd" || name == "lstat";
  }

  mc::Ensemble& main_ensemble() {
    if (!ensemble) {
      const mc::EnsembleNeeds needs = union_needs();
      const WeightSpec* w2 =
          cfg.weights2 ? &cfg.weights2.value() : nullptr;
      if (needs.paired && w2 == nullptr) {
        throw ConfigError("paired check requires the weights2 block");
      }
      ensemble = mc::run_replications(
          cfg.model_or_throw(), cfg.weights_or_throw(), cfg.grid_or_throw(),
          cfg.run.n, cfg.run.R, cfg.run.seed, needs, workers, w2, quad(),
          digest);
      draws += ensemble->rng_draws;
    }
    return *ensemble;
  }

  oracle::Engine& direct() {
    if (!direct_engine) {
      direct_engine.emplace(cfg.model_or_throw(), cfg.weights_or_throw(),
                            oracle::WeightRole::Direct, quad());
    }
    return *direct_engine;
  }
  oracle::Engine& expansion() {
    if (!expansion_engine) {
      expansion_engine.emplace(cfg.model_or_throw(), cfg.weights_or_throw(),
                               oracle::WeightRole::Expansion, quad());
    }
    return *expansion_engine;
  }
  oracle::Engine& second_direct() {
    if (!second_engine) {
      if (!cfg.weights2) throw ConfigError("paired check requires weights2");
      second_engine.emplace(cfg.model_or_throw(), *cfg.weights2,
                            oracle::WeightRole::Direct, quad());
    }
    return *second_engine;
  }

  mc::Tolerances tolerances(const CheckSpec& check) const {
    mc::Tolerances tol;
    tol.z_max = check.z_max;
    // The finite-n mean is exact, so the mean check carries no bias slack;
    // second-moment checks default to 2/n for their O(1/n) terms.
    const double default_slack =
        check.name == "mean" ? 0.0 : 2.0 / static_cast<double>(cfg.run.n);
    tol.bias_slack = check.bias_slack.value_or(default_slack);
    tol.mean_abs_z_max = check.mean_abs_z_max;
    return tol;
  }
};

CheckResult wrap_moment(const CheckContext& ctx, const CheckSpec& check,
                        const std::string& operation,
                        const mc::MomentReport& report) {
  CheckResult out;
  out.name = check.name;
  out.operation = operation;
  out.pass = report.pass;
  out.notes = report.notes;
  json j = moment_json(report);
  j["check"] = check.name;
  j["digest"] = ctx.digest;
  j["version"] = kVersion;
  j["n"] = ctx.cfg.run.n;
  j["R"] = ctx.cfg.run.R;
  j["seed"] = ctx.cfg.run.seed;
  out.json_text = j.dump(2);
  out.csv_text = moment_csv(report, ctx.cfg.run.n, ctx.cfg.run.R, ctx.cfg.run.seed);
  return out;
}

// Detects weights2 == lambda * weights1 for the built-in families; used to
// add exact bilinearity rows to the paired report.
std::optional<double> scalar_multiple(const TimeWeightSpec& a,
                                      const TimeWeightSpec& b) {
  if (a.kind != b.kind) return std::nullopt;
  auto ratio = [](double x, double y) -> std::optional<double> {
    if (x == 0.0 && y == 0.0) return std::nullopt;  // unconstrained
    if (x == 0.0) return std::nullopt;
    return y / x;
  };
  const auto ra = ratio(a.a, b.a);
  const auto rb = ratio(a.b, b.b);
  if (ra && rb) return (*ra == *rb) ? ra : std::nullopt;
  if (ra && a.b == 0.0 && b.b == 0.0) return ra;
  if (rb && a.a == 0.0 && b.a == 0.0) return rb;
  return std::nullopt;
}

CheckResult run_fdd_check(CheckContext& ctx, const CheckSpec& check) {
  const auto& grid = ctx.cfg.grid_or_throw();
  if (check.times.empty() || check.coefficients.empty()) {
    throw ConfigError("fdd check: needs times and coefficients");
  }
  std::vector<std::size_t> idx;
  for (double t : check.times) {
    bool found = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::fabs(grid[i] - t) <= 1e-12) {
        idx.push_back(i);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("fdd check: time not on the grid");
  }

  auto& ens = ctx.main_ensemble();
  CheckResult out;
  out.name = check.name;
  out.operation = "fdd_normality";
  out.pass = true;
  json vectors = json::array();
  std::ostringstream csv;
  csv << "t,s,statistic,mc,se,oracle,z,n,R,seed\n";
  bool all_degenerate = true;
  for (const auto& coeffs : check.coefficients) {
    if (coeffs.size() != idx.size()) {
      throw ConfigError("fdd check: coefficient vector length mismatch");
    }
    const auto report = mc::fdd_normality(ens, idx, coeffs, ctx.direct(), check.p_min);
    all_degenerate = all_degenerate && report.degenerate;
    out.pass = out.pass && report.pass;
    json v{{"times", report.times},
           {"coefficients", report.coefficients},
           {"sigma2_oracle", report.sigma2_oracle},
           {"mean_shift", report.mean_shift},
           {"degenerate", report.degenerate},
           {"pass", report.pass}};
    if (!report.degenerate) {
      v["ks_d"] = report.ks_d;
      v["ks_p"] = report.ks_p;
      v["ad_a2"] = report.ad_a2;
      v["ad_p"] = report.ad_p;
    } else {
      out.notes.push_back("degenerate oracle variance: test skipped");
    }
    vectors.push_back(v);
    std::ostringstream label;
    label << "a=(";
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      label << (k ? ";" : "") << fmt(coeffs[k]);
    }
    label << ")";
    csv << fmt(report.times.front()) << ',' << fmt(report.times.back()) << ','
        << "ks_p" << label.str() << ',' << fmt(report.ks_p) << ",0,"
        << fmt(check.p_min) << ",0," << ctx.cfg.run.n << ',' << ctx.cfg.run.R
        << ',' << ctx.cfg.run.seed << '\n';
    csv << fmt(report.times.front()) << ',' << fmt(report.times.back()) << ','
        << "ad_p" << label.str() << ',' << fmt(report.ad_p) << ",0,"
        << fmt(check.p_min) << ",0," << ctx.cfg.run.n << ',' << ctx.cfg.run.R
        << ',' << ctx.cfg.run.seed << '\n';
  }
  out.degenerate = all_degenerate;
  json j{{"check", check.name}, {"digest", ctx.digest}, {"version", kVersion},
         {"n", ctx.cfg.run.n},  {"R", ctx.cfg.run.R},   {"seed", ctx.cfg.run.seed},
         {"p_min", check.p_min}, {"vectors", vectors},   {"pass", out.pass}};
  out.json_text = j.dump(2);
  out.csv_text = csv.str();
  return out;
}

CheckResult run_remainder_check(CheckContext& ctx, const CheckSpec& check) {
  const auto& run = ctx.cfg.run;
  if (run.n_ladder.size() < 3) {
    throw ConfigError("remainder check: run.n_ladder needs >= 3 rungs");
  }
  const auto report = mc::remainder_decay(
      ctx.cfg.model_or_throw(), ctx.cfg.weights_or_throw(),
      ctx.cfg.grid_or_throw(), run.n_ladder, run.decay_R,
      run.seed ^ 0x9e3779b97f4a7c15ull, ctx.workers);
  ctx.draws += report.rng_draws;

  CheckResult out;
  out.name = check.name;
  out.operation = "remainder_decay";
  if (check.expect_zero) {
    out.pass = true;
    for (double mm : report.medians) out.pass = out.pass && (mm <= check.zero_tol);
    if (!out.pass) out.notes.push_back("expected exactly-zero remainder");
  } else {
    out.pass = report.strictly_decreasing &&
               report.ratio_last_first <= check.max_ratio;
    if (!report.strictly_decreasing) out.notes.push_back("medians not strictly decreasing");
    if (report.ratio_last_first > check.max_ratio) {
      out.notes.push_back("decay ratio " + fmt(report.ratio_last_first) +
                          " exceeds " + fmt(check.max_ratio));
    }
  }
  json j{{"check", check.name},
         {"digest", ctx.digest},
         {"version", kVersion},
         {"ladder", report.ladder},
         {"medians", report.medians},
         {"ratio_last_first", report.ratio_last_first},
         {"loglog_slope", report.loglog_slope},
         {"strictly_decreasing", report.strictly_decreasing},
         {"R", run.decay_R},
         {"seed", run.seed},
         {"pass", out.pass}};
  out.json_text = j.dump(2);
  std::ostringstream csv;
  csv << "t,s,statistic,mc,se,oracle,z,n,R,seed\n";
  for (std::size_t k = 0; k < report.ladder.size(); ++k) {
    csv << "0,0,remainder_sup_median," << fmt(report.medians[k]) << ",0,0,0,"
        << report.ladder[k] << ',' << run.decay_R << ',' << run.seed << '\n';
  }
  out.csv_text = csv.str();
  return out;
}

mc::Copula parse_copula(const std::string& name) {
  if (name == "independent") return mc::Copula::Independent;
  if (name == "comonotone") return mc::Copula::Comonotone;
  if (name == "gaussian") return mc::Copula::Gaussian;
  throw ConfigError("bridge check: unknown copula '" + name + "'");
}

CheckResult run_bridge_check(CheckContext& ctx, const CheckSpec& check) {
  mc::BridgeConfig bc;
  bc.copula = parse_copula(check.copula);
  bc.rho = check.rho;
  bc.n = check.bridge_n;
  bc.R = check.bridge_R;
  std::uint64_t mix = 0;
  for (char c : check.copula) mix = mix * 131 + static_cast<unsigned char>(c);
  bc.seed = ctx.cfg.run.seed + mix;
  bc.lattice = check.lattice;
  bc.workers = ctx.workers;

  const auto report = mc::bridge_check(bc);
  ctx.draws += report.rng_draws;

  CheckResult out;
  out.name = check.name + "_" + check.copula;
  out.operation = "bridge_check";
  out.pass = report.sup_dev11 <= check.sup_tol &&
             report.sup_dev22 <= check.sup_tol &&
             report.sup_dev12 <= check.sup_tol;
  if (!out.pass) out.notes.push_back("covariance surface deviation above tolerance");

  json bk = json::array();
  if (!check.bk_ladder.empty()) {
    for (std::size_t k = 1; k < check.bk_ladder.size(); ++k) {
      if (check.bk_ladder[k] <= check.bk_ladder[k - 1]) {
        throw ConfigError("bridge check: bk_ladder must be strictly increasing");
      }
    }
    std::vector<double> med1, med2;
    for (std::size_t rung_n : check.bk_ladder) {
      mc::BridgeConfig rung = bc;
      rung.n = rung_n;
      rung.R = check.bk_r;
      rung.seed = bc.seed + 0x10000 + rung_n;
      const auto rr = mc::bridge_check(rung);
      ctx.draws += rr.rng_draws;
      med1.push_back(rr.bk_sup_median1);
      med2.push_back(rr.bk_sup_median2);
      bk.push_back({{"n", rung_n},
                    {"bk_sup_median1", rr.bk_sup_median1},
                    {"bk_sup_median2", rr.bk_sup_median2}});
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < med1.size(); ++k) {
      decreasing = decreasing && med1[k] < med1[k - 1] && med2[k] < med2[k - 1];
    }
    if (!decreasing) {
      out.pass = false;
      out.notes.push_back("empirical/quantile sup gap not decreasing in n");
    }
  }

  json j{{"check", out.name},
         {"digest", ctx.digest},
         {"version", kVersion},
         {"copula", check.copula},
         {"rho", check.rho},
         {"n", bc.n},
         {"R", bc.R},
         {"seed", bc.seed},
         {"lattice", check.lattice},
         {"axis", report.axis},
         {"cov11", report.cov11},
         {"cov22", report.cov22},
         {"cov12", report.cov12},
         {"theory_margin", report.theory_margin},
         {"theory_cross", report.theory_cross},
         {"sup_dev11", report.sup_dev11},
         {"sup_dev22", report.sup_dev22},
         {"sup_dev12", report.sup_dev12},
         {"bk_sup_median1", report.bk_sup_median1},
         {"bk_sup_median2", report.bk_sup_median2},
         {"bk_ladder", bk},
         {"sup_tol", check.sup_tol},
         {"pass", out.pass}};
  out.json_text = j.dump(2);

  std::ostringstream csv;
  csv << "t,s,statistic,mc,se,oracle,z,n,R,seed\n";
  const std::size_t k = report.axis.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      csv << fmt(report.axis[a]) << ',' << fmt(report.axis[b]) << ",margin1_cov,"
          << fmt(report.cov11[a * k + b]) << ",0,"
          << fmt(report.theory_margin[a * k + b]) << ",0," << bc.n << ','
          << bc.R << ',' << bc.seed << '\n';
      csv << fmt(report.axis[a]) << ',' << fmt(report.axis[b]) << ",cross_cov,"
          << fmt(report.cov12[a * k + b]) << ",0,"
          << fmt(report.theory_cross[a * k + b]) << ",0," << bc.n << ','
          << bc.R << ',' << bc.seed << '\n';
    }
  }
  out.csv_text = csv.str();
  return out;
}

json tightness_json(const oracle::TightnessReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"t", p.t}, {"s", p.s}, {"increment_variance", p.increment_variance}});
  }
  return json{{"delta", report.delta},
              {"condition_r", report.condition_r},
              {"pairs", pairs},
              {"fitted_exponent", report.fitted_exponent},
              {"fitted_k0", report.fitted_k0},
              {"degenerate", report.degenerate},
              {"satisfied_on_grid", report.satisfied_on_grid}};
}

CheckResult run_tightness_check(CheckContext& ctx, const CheckSpec& check) {
  const auto& model = ctx.cfg.model_or_throw();
  const auto& weights = ctx.cfg.weights_or_throw();
  const auto& grid = ctx.cfg.grid_or_throw();
  if (!model.is_path_model()) {
    throw ConfigError("tightness check: model is flagged as FDD-only");
  }

  auto scan = [&](const TimeGrid& g) {
    oracle::Engine engine(model, weights, oracle::WeightRole::Direct, ctx.quad());
    return oracle::holder_scan(engine, g, check.delta, check.condition_r);
  };
  const auto coarse = scan(grid);
  const auto coarse_repeat = scan(grid);
  const TimeGrid refined = TimeGrid::linspace(
      check.refined_count, grid[0], grid[grid.size() - 1], grid.horizon());
  const auto fine = scan(refined);

  CheckResult out;
  out.name = check.name;
  out.operation = "holder_scan";
  if (coarse.degenerate) {
    out.degenerate = true;
    out.pass = true;
    out.notes.push_back("degenerate scan: all increments numerically zero");
  } else {
    const double repeat_gap =
        std::fabs(coarse.fitted_exponent - coarse_repeat.fitted_exponent);
    const double resolution_gap =
        std::fabs(coarse.fitted_exponent - fine.fitted_exponent);
    out.pass = repeat_gap <= 1e-9 && resolution_gap <= check.exponent_match_tol;
    if (repeat_gap > 1e-9) out.notes.push_back("scan not reproducible");
    if (resolution_gap > check.exponent_match_tol) {
      out.notes.push_back("exponent mismatch between scan resolutions: " +
                          fmt(resolution_gap));
    }
  }

  json j{{"check", check.name},
         {"digest", ctx.digest},
         {"version", kVersion},
         {"coarse", tightness_json(coarse)},
         {"refined", tightness_json(fine)},
         {"refined_count", check.refined_count},
         {"exponent_match_tol", check.exponent_match_tol},
         {"pass", out.pass}};
  out.json_text = j.dump(2);

  std::ostringstream csv;
  csv << "t,s,value,kind\n";
  for (const auto& p : coarse.pairs) {
    csv << fmt(p.t) << ',' << fmt(p.s) << ',' << fmt(p.increment_variance)
        << ",increment_variance\n";
  }
  csv << "0,0," << fmt(coarse.fitted_exponent) << ",fitted_exponent\n";
  csv << "0,0," << fmt(coarse.fitted_k0) << ",fitted_k0\n";
  out.csv_text = csv.str();
  return out;
}

CheckResult run_constants_check(CheckContext& ctx, const CheckSpec& check) {
  const auto& weights = ctx.cfg.weights_or_throw();
  if (weights.q.kind != TimeWeightSpec::Kind::Constant || weights.q.a != 1.0) {
    throw ConfigError("constants check: requires the unit constant weight");
  }
  const double t = ctx.cfg.grid_or_throw()[0];
  auto& engine = ctx.direct();
  const double c2 = engine.tail_second_moment(t);
  const double diag = engine.residual_cov(t, t);
  const double mean = engine.limit_mean(t);

  mc::MomentReport report;
  report.target = "constants";
  auto cell = [&](const char* name, double mcv, double oracle_value, double tol) {
    mc::ReportCell c;
    c.t = t;
    c.s = t;
    c.statistic = name;
    c.mc = mcv;
    c.oracle = oracle_value;
    c.bias = mcv - oracle_value;
    c.pass = std::fabs(mcv - oracle_value) <= tol;
    report.cells.push_back(c);
  };
  cell("tail_second_moment", c2, 1.0 / 3.0, check.tol_c2);
  cell("residual_var_diag", diag, 1.0 / 12.0, check.tol_c2);
  cell("limit_mean", mean, 0.5, check.tol_mean);
  report.pass = true;
  for (const auto& c : report.cells) report.pass = report.pass && c.pass;
  return wrap_moment(ctx, check, "oracle_constants", report);
}

CheckResult run_rank_sum_check(CheckContext& ctx, const CheckSpec& check) {
  if (check.n_min < 2 || check.n_max < check.n_min) {
    throw ConfigError("rank_sum check: need 2 <= n_min <= n_max");
  }
  const ModelSpec model = ModelSpec::comonotone();
  const std::size_t span = check.n_max - check.n_min + 1;
  double worst = 0.0;
  std::uint64_t draws = 0;
  std::vector<double> column;
  std::vector<double> scratch;
  for (std::size_t k = 0; k < check.columns; ++k) {
    const std::size_t n = check.n_min + (k % span);
    column.resize(n);
    scratch.resize(n);
    SubstreamRng rng(ctx.cfg.run.seed, 0xC0000000ull + k);
    for (std::size_t j = 0; j < n; ++j) column[j] = rng.next_uniform();
    draws += rng.draw_count();
    const auto an = analyze_column(column, model, 0.5, 0);
    for (std::size_t j = 0; j < n; ++j) {
      scratch[j] = static_cast<double>(an.rank[j]) / n - an.cdf[j];
    }
    const double direct = pairwise_sum(scratch);
    const double closed =
        0.5 * static_cast<double>(n + 1) - pairwise_sum(an.cdf);
    worst = std::max(worst, std::fabs(direct - closed));
  }
  ctx.draws += draws;

  CheckResult out;
  out.name = check.name;
  out.operation = "rank_sum_identity";
  out.pass = worst <= check.identity_tol;
  json j{{"check", check.name},
         {"digest", ctx.digest},
         {"version", kVersion},
         {"columns", check.columns},
         {"n_min", check.n_min},
         {"n_max", check.n_max},
         {"worst_abs_gap", worst},
         {"tolerance", check.identity_tol},
         {"seed", ctx.cfg.run.seed},
         {"pass", out.pass}};
  out.json_text = j.dump(2);
  std::ostringstream csv;
  csv << "t,s,statistic,mc,se,oracle,z,n,R,seed\n";
  csv << "0,0,rank_sum_worst_gap," << fmt(worst) << ",0,0,0,0,"
      << check.columns << ',' << ctx.cfg.run.seed << '\n';
  out.csv_text = csv.str();
  return out;
}

CheckResult run_lstat_check(CheckContext& ctx, const CheckSpec& check) {
  auto& ens = ctx.main_ensemble();
  auto report = mc::lstat_mean_report(ens, ctx.expansion(), ctx.tolerances(check));

  // Rank-form agreement spot check on a fresh replication.
  const PathSample sample =
      sample_paths(ctx.cfg.model_or_throw(), ctx.cfg.run.n,
                   ctx.cfg.grid_or_throw(), ctx.cfg.run.seed,
                   0xD0000000ull, &ctx.draws);
  const auto sorted_form = l_statistic(sample, ctx.cfg.weights_or_throw());
  const auto rank_form = l_statistic_rank_form(sample, ctx.cfg.weights_or_throw());
  double gap = 0.0;
  for (std::size_t i = 0; i < rank_form.size(); ++i) {
    gap = std::max(gap, std::fabs(sorted_form.j_n[i] - rank_form[i]));
  }
  if (gap > 1e-12) {
    report.pass = false;
    report.notes.push_back("rank form disagrees with order-statistic form: " + fmt(gap));
  } else {
    report.notes.push_back("rank form agrees with order-statistic form to 1e-12");
  }
  return wrap_moment(ctx, check, "l_statistic", report);
}

CheckResult run_paired_check(CheckContext& ctx, const CheckSpec& check) {
  auto& ens = ctx.main_ensemble();
  auto report = mc::paired_covariance_report(ens, ctx.direct(),
                                             ctx.second_direct(),
                                             ctx.tolerances(check));
  // Exact oracle bilinearity rows when the second family is a scalar
  // multiple of the first.
  const auto lambda =
      scalar_multiple(ctx.cfg.weights_or_throw().q, ctx.cfg.weights2->q);
  if (lambda) {
    const auto& grid = ens.grid;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double paired = oracle::paired_residual_cov(
          ctx.direct(), ctx.second_direct(), grid[i], grid[i]);
      const double scaled = *lambda * ctx.direct().residual_cov(grid[i], grid[i]);
      mc::ReportCell cell;
      cell.t = grid[i];
      cell.s = grid[i];
      cell.statistic = "bilinearity_diag";
      cell.mc = paired;
      cell.oracle = scaled;
      cell.bias = paired - scaled;
      cell.pass = std::fabs(paired - scaled) <= 1e-7;
      report.pass = report.pass && cell.pass;
      report.cells.push_back(cell);
    }
  }
  return wrap_moment(ctx, check, "paired_covariance", report);
}

CheckResult dispatch_check(CheckContext& ctx, const CheckSpec& check) {
  if (check.name == "mean") {
    return wrap_moment(ctx, check, "estimate_moments",
                       mc::star_mean_report(ctx.main_ensemble(), ctx.direct(),
                                            ctx.tolerances(check)));
  }
  if (check.name == "variance") {
    return wrap_moment(ctx, check, "estimate_moments",
                       mc::variance_report(ctx.main_ensemble(), ctx.direct(),
                                           ctx.tolerances(check)));
  }
  if (check.name == "covariance") {
    return wrap_moment(ctx, check, "estimate_moments",
                       mc::covariance_report(ctx.main_ensemble(), ctx.direct(),
                                             ctx.tolerances(check)));
  }
  if (check.name == "combined_covariance") {
    return wrap_moment(
        ctx, check, "estimate_moments",
        mc::combined_covariance_report(ctx.main_ensemble(), ctx.expansion(),
                                       ctx.tolerances(check)));
  }
  if (check.name == "cross_pilot") {
    return wrap_moment(ctx, check, "estimate_moments",
                       mc::cross_pilot_report(ctx.main_ensemble(),
                                              ctx.expansion(),
                                              ctx.tolerances(check)));
  }
  if (check.name == "paired") return run_paired_check(ctx, check);
  if (check.name == "fdd") return run_fdd_check(ctx, check);
  if (check.name == "remainder") return run_remainder_check(ctx, check);
  if (check.name == "bridge") return run_bridge_check(ctx, check);
  if (check.name == "tightness") return run_tightness_check(ctx, check);
  if (check.name == "constants") return run_constants_check(ctx, check);
  if (check.name == "rank_sum") return run_rank_sum_check(ctx, check);
  if (check.name == "lstat") return run_lstat_check(ctx, check);
  throw ConfigError("unknown check name '" + check.name + "'");
}

void uniquify_names(std::vector<CheckResult>& results) {
  std::map<std::string, int> seen;
  for (auto& r : results) {
    const int count = ++seen[r.name];
    if (count > 1) r.name += "_" + std::to_string(count);
  }
}

}  // namespace

RunResult run_checks(const ExperimentConfig& config, int workers,
                     const std::optional<std::string>& only_name) {
  if (config.checks.empty()) {
    throw ConfigError("config: no checks configured");
  }
  CheckContext ctx(config, workers);
  RunResult result;
  result.digest = ctx.digest;
  bool matched = false;
  for (const auto& check : config.checks) {
    if (only_name && check.name != *only_name) continue;
    matched = true;
    result.checks.push_back(dispatch_check(ctx, check));
  }
  if (only_name && !matched) {
    throw ConfigError("config: no '" + *only_name + "' checks present");
  }
  uniquify_names(result.checks);
  for (const auto& r : result.checks) result.pass = result.pass && r.pass;
  result.rng_draws = ctx.draws;
  return result;
}

RunResult run_oracle(const ExperimentConfig& config, int workers) {
  (void)workers;
  const auto& model = config.model_or_throw();
  const auto& weights = config.weights_or_throw();
  const auto& grid = config.grid_or_throw();
  const oracle::QuadratureOptions quad{config.oracle.tol_1d, config.oracle.tol_2d};

  RunResult result;
  result.digest = config_digest(config);
  result.pass = true;
  result.rng_draws = 0;

  oracle::Engine direct(model, weights, oracle::WeightRole::Direct, quad);

  json surfaces = json::array();
  std::ostringstream csv;
  csv << "t,s,value,kind\n";
  auto emit = [&](const oracle::CovarianceSurface& surface, const char* kind,
                  bool psd_required) {
    const std::size_t m = grid.size();
    if (psd_required) {
      const double min_eig = surface.min_eigenvalue();
      if (min_eig < -1e-8) {
        throw NumericalError(std::string("covariance surface '") + kind +
                                 "' is indefinite beyond quadrature error",
                             -min_eig);
      }
    }
    json values = json::array();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        csv << fmt(grid[i]) << ',' << fmt(grid[j]) << ','
            << fmt(surface.at(i, j)) << ',' << kind << '\n';
        values.push_back(surface.at(i, j));
      }
    }
    surfaces.push_back({{"kind", kind},
                        {"values", values},
                        {"min_eigenvalue", surface.min_eigenvalue()}});
  };

  emit(oracle::residual_surface(direct, grid), "residual_cov", true);
  if (weights.eta_defined()) {
    oracle::Engine expansion(model, weights, oracle::WeightRole::Expansion, quad);
    emit(oracle::residual_surface(expansion, grid), "residual_cov_expansion", true);
    emit(oracle::score_surface(expansion, grid), "score_cov", true);
    emit(oracle::cross_surface(expansion, grid), "cross_cov", false);
    emit(oracle::combined_surface(expansion, grid), "combined_cov", true);
  }

  json per_time = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    json row{{"t", grid[i]},
             {"limit_mean", direct.limit_mean(grid[i])},
             {"tail_second_moment", direct.tail_second_moment(grid[i])}};
    csv << fmt(grid[i]) << ',' << fmt(grid[i]) << ','
        << fmt(direct.limit_mean(grid[i])) << ",limit_mean\n";
    if (weights.eta_defined()) {
      const double eta = oracle::lstat_limit(model, weights, grid[i], quad);
      row["lstat_limit"] = eta;
      csv << fmt(grid[i]) << ',' << fmt(grid[i]) << ',' << fmt(eta)
          << ",lstat_limit\n";
    }
    per_time.push_back(row);
  }

  CheckResult surfaces_result;
  surfaces_result.name = "oracle_surfaces";
  surfaces_result.operation = "covariance_surfaces";
  surfaces_result.pass = true;
  json j{{"check", "oracle_surfaces"},
         {"digest", result.digest},
         {"version", kVersion},
         {"grid", std::vector<double>(grid.points().begin(), grid.points().end())},
         {"surfaces", surfaces},
         {"per_time", per_time},
         {"rng_draws", 0},
         {"pass", true}};
  surfaces_result.json_text = j.dump(2);
  surfaces_result.csv_text = csv.str();
  result.checks.push_back(std::move(surfaces_result));
  return result;
}

RunResult run_simulate(const ExperimentConfig& config, int workers) {
  const auto& model = config.model_or_throw();
  const auto& weights = config.weights_or_throw();
  const auto& grid = config.grid_or_throw();

  mc::EnsembleNeeds needs;
  needs.lstat = weights.eta_defined();
  RunResult result;
  result.digest = config_digest(config);

  const auto ens = mc::run_replications(
      model, weights, grid, config.run.n, config.run.R, config.run.seed, needs,
      workers, nullptr, {config.oracle.tol_1d, config.oracle.tol_2d},
      result.digest);
  result.rng_draws = ens.rng_draws;

  std::ostringstream csv;
  csv << "t,s,statistic,mc,se,oracle,z,n,R,seed\n";
  json rows = json::array();
  auto emit = [&](double t, double s, const char* stat, double value, double se) {
    csv << fmt(t) << ',' << fmt(s) << ',' << stat << ',' << fmt(value) << ','
        << fmt(se) << ",,," << config.run.n << ',' << config.run.R << ','
        << config.run.seed << '\n';
    rows.push_back({{"t", t}, {"s", s}, {"statistic", stat}, {"mc", value}, {"se", se}});
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto mean = estimate_mean(ens.beta_star[i]);
    emit(grid[i], grid[i], "residual_star_mean", mean.mean, mean.se);
    const auto var = estimate_variance(ens.beta[i]);
    emit(grid[i], grid[i], "residual_variance", var.variance, var.se);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const auto cov = estimate_covariance(ens.beta[i], ens.beta[j]);
      emit(grid[i], grid[j], "residual_covariance", cov.covariance, cov.se);
    }
  }
  if (needs.lstat) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto mean = estimate_mean(ens.lstat[i]);
      emit(grid[i], grid[i], "lstat_mean", mean.mean, mean.se);
      const auto qmean = estimate_mean(ens.qcount[i]);
      emit(grid[i], grid[i], "qcount_mean", qmean.mean, qmean.se);
    }
  }

  CheckResult sim;
  sim.name = "simulate";
  sim.operation = "run_replications";
  sim.pass = true;
  json j{{"check", "simulate"},
         {"digest", result.digest},
         {"version", kVersion},
         {"n", config.run.n},
         {"R", config.run.R},
         {"seed", config.run.seed},
         {"rng_draws", ens.rng_draws},
         {"rows", rows},
         {"pass", true}};
  sim.json_text = j.dump(2);
  sim.csv_text = csv.str();
  result.checks.push_back(std::move(sim));
  return result;
}

std::string describe(const ExperimentConfig& config) {
  std::ostringstream os;
  os << "emproc " << kVersion << " plan (digest " << config_digest(config) << ")\n";
  if (config.model) {
    os << "model: " << config.model->name();
    if (config.model->kind == ModelKind::OrnsteinUhlenbeck) {
      os << " (rho=" << config.model->ou_scale << ")";
    }
    os << "\n";
  }
  if (config.weights) {
    os << "weights: " << config.weights->q.name();
    if (config.weights->lstat) {
      os << "; lstat: " << config.weights->lstat->c.name() << ", "
         << config.weights->lstat->q0.name() << ", "
         << config.weights->lstat->z.name();
    }
    os << "\n";
  }
  if (config.weights2) os << "weights2: " << config.weights2->q.name() << "\n";
  if (config.grid) {
    os << "grid: " << config.grid->size() << " points in ["
       << config.grid->points().front() << ", " << config.grid->points().back()
       << "], horizon " << config.grid->horizon() << "\n";
  }
  os << "run: n=" << config.run.n << ", R=" << config.run.R
     << ", seed=" << config.run.seed;
  if (!config.run.n_ladder.empty()) {
    os << ", ladder=[";
    for (std::size_t i = 0; i < config.run.n_ladder.size(); ++i) {
      os << (i ? "," : "") << config.run.n_ladder[i];
    }
    os << "] x R=" << config.run.decay_R;
  }
  os << "\n";
  os << "checks (" << config.checks.size() << "):\n";
  const std::size_t m = config.grid ? config.grid->size() : 0;
  for (std::size_t i = 0; i < config.checks.size(); ++i) {
    const auto& c = config.checks[i];
    os << "  " << (i + 1) << ". " << c.name;
    double work = 0.0;
    if (CheckContext::uses_main_ensemble(c.name)) {
      work = static_cast<double>(config.run.n) * static_cast<double>(config.run.R) *
             static_cast<double>(m);
    } else if (c.name == "remainder") {
      for (std::size_t rung : config.run.n_ladder) {
        work += static_cast<double>(rung) * static_cast<double>(config.run.decay_R) *
                static_cast<double>(m);
      }
    } else if (c.name == "bridge") {
      work = static_cast<double>(c.bridge_n) * static_cast<double>(c.bridge_R);
      for (std::size_t rung : c.bk_ladder) {
        work += static_cast<double>(rung) * static_cast<double>(c.bk_r);
      }
      os << " [" << c.copula << "]";
    } else if (c.name == "tightness") {
      work = static_cast<double>(c.refined_count) *
             static_cast<double>(c.refined_count);
    } else if (c.name == "rank_sum") {
      work = static_cast<double>(c.columns) *
             0.5 * static_cast<double>(c.n_min + c.n_max);
    }
    os << " (~" << work << " work units)\n";
  }
  os << "output: directory=" << config.output.directory << " formats=";
  os << (config.output.csv ? "csv" : "");
  os << ((config.output.csv && config.output.json) ? "," : "");
  os << (config.output.json ? "json" : "");
  os << "\n";
  return os.str();
}

void write_reports(const ExperimentConfig& config, const RunResult& result,
                   const std::string& directory, const std::string& subcommand) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  for (const auto& check : result.checks) {
    if (config.output.json) {
      std::ofstream out(fs::path(directory) / (check.name + ".json"),
                        std::ios::binary);
      out << check.json_text << "\n";
    }
    if (config.output.csv) {
      std::ofstream out(fs::path(directory) / (check.name + ".csv"),
                        std::ios::binary);
      out << "# digest=" << result.digest << " version=" << kVersion << "\n"
          << check.csv_text;
    }
  }

  json checks = json::array();
  for (const auto& check : result.checks) {
    checks.push_back({{"name", check.name},
                      {"operation", check.operation},
                      {"pass", check.pass},
                      {"degenerate", check.degenerate},
                      {"notes", check.notes}});
  }
  json summary{{"version", kVersion},
               {"subcommand", subcommand},
               {"digest", result.digest},
               {"config", json::parse(serialize_config(config))},
               {"rng_draws", result.rng_draws},
               {"checks", checks},
               {"pass", result.pass}};
  std::ofstream out(fs::path(directory) / "summary.json", std::ios::binary);
  out << summary.dump(2) << "\n";
}

}  // namespace emproc
