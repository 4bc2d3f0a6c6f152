#include "emproc/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "emproc/pairwise.hpp"
#include "emproc/special.hpp"
#include "emproc/stats.hpp"

namespace emproc::mc {

namespace {

// Contiguous-range worker pool. Results may only be written to disjoint,
// preallocated slots indexed by the replication id, which keeps every output
// independent of the worker count.
template <typename Body>
void parallel_ranges(std::size_t count, int workers, Body&& body) {
  workers = std::max(workers, 1);
  const std::size_t w = std::min<std::size_t>(workers, std::max<std::size_t>(count, 1));
  if (w <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t chunk = (count + w - 1) / w;
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t begin = k * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double slack_adjusted_abs_z(double mc, double oracle, double se, double slack) {
  const double excess = std::max(0.0, std::fabs(mc - oracle) - slack);
  return se > 0.0 ? excess / se : (excess > 0.0 ? 1e300 : 0.0);
}

void finalize_report(MomentReport& report, const Tolerances& tol) {
  bool all_cells = true;
  double sum_z = 0.0;
  double sum_raw = 0.0;
  for (const auto& cell : report.cells) all_cells = all_cells && cell.pass;
  for (const auto& cell : report.cells) {
    sum_z += slack_adjusted_abs_z(cell.mc, cell.oracle, cell.se, tol.bias_slack);
    sum_raw += std::fabs(cell.z);
  }
  report.mean_abs_z_adjusted =
      report.cells.empty() ? 0.0 : sum_z / static_cast<double>(report.cells.size());
  report.mean_abs_z_raw =
      report.cells.empty() ? 0.0 : sum_raw / static_cast<double>(report.cells.size());
  bool drift_ok = true;
  if (tol.mean_abs_z_max > 0.0 && report.cells.size() >= 3) {
    drift_ok = report.mean_abs_z_adjusted <= tol.mean_abs_z_max;
    if (!drift_ok) {
      std::ostringstream os;
      os << "systematic drift: mean slack-adjusted |z| = "
         << report.mean_abs_z_adjusted << " > " << tol.mean_abs_z_max;
      report.notes.push_back(os.str());
    }
  }
  report.pass = all_cells && drift_ok;
}

void require_se_validity(const Ensemble& ens) {
  if (ens.R < 30) {
    throw ConfigError("moment report: need R >= 30 for valid standard errors");
  }
}

ReportCell make_cell(double t, double s, std::string statistic, double mc,
                     double se, double oracle, const Tolerances& tol) {
  ReportCell cell;
  cell.t = t;
  cell.s = s;
  cell.statistic = std::move(statistic);
  cell.mc = mc;
  cell.se = se;
  cell.oracle = oracle;
  cell.bias = mc - oracle;
  cell.z = se > 0.0 ? (mc - oracle) / se : 0.0;
  cell.pass = std::fabs(mc - oracle) <= tol.z_max * se + tol.bias_slack;
  return cell;
}

}  // namespace

Ensemble run_replications(const ModelSpec& model, const WeightSpec& weights,
                          const TimeGrid& grid, std::size_t n, std::size_t R,
                          std::uint64_t seed, const EnsembleNeeds& needs,
                          int workers, const WeightSpec* weights2,
                          oracle::QuadratureOptions quad,
                          std::string config_digest) {
  if (R < 2) throw ConfigError("run_replications: need R >= 2");
  weights.validate();
  if (weights2 != nullptr) weights2->validate();
  model.validate_grid(grid);

  const std::size_t m = grid.size();
  Ensemble ens;
  ens.model = model;
  ens.weights = weights;
  if (weights2 != nullptr) ens.weights2 = *weights2;
  ens.grid = grid;
  ens.n = n;
  ens.R = R;
  ens.seed = seed;
  ens.config_digest = std::move(config_digest);

  const bool want_alpha = needs.alpha || needs.gamma;
  if (want_alpha) {
    oracle::Engine eta_engine(model, weights, oracle::WeightRole::Expansion, quad);
    ens.eta.resize(m);
    for (std::size_t i = 0; i < m; ++i) ens.eta[i] = eta_engine.lstat_limit(grid[i]);
  }

  auto alloc = [&](std::vector<std::vector<double>>& series) {
    series.assign(m, std::vector<double>(R));
  };
  alloc(ens.beta);
  alloc(ens.beta_star);
  if (needs.alpha) alloc(ens.alpha);
  if (needs.gamma) {
    alloc(ens.gamma);
    alloc(ens.beta_expansion);
  }
  if (needs.lstat) {
    alloc(ens.lstat);
    alloc(ens.qcount);
  }
  if (needs.paired) {
    if (weights2 == nullptr) {
      throw ConfigError("run_replications: paired evaluation needs weights2");
    }
    alloc(ens.beta2);
  }
  if (needs.remainder) ens.remainder_sup.resize(R);

  std::vector<std::uint64_t> draws(R, 0);

  EvalOptions opt;
  opt.want_alpha = needs.alpha;
  opt.want_gamma = needs.gamma;
  opt.want_lstat = needs.lstat;
  opt.want_remainder = needs.remainder;
  opt.eta = ens.eta;
  opt.weights2 = needs.paired ? weights2 : nullptr;

  parallel_ranges(R, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const PathSample sample =
          sample_paths(model, n, grid, seed, r, &draws[r]);
      const FullEvaluation full = evaluate_replication(sample, weights, opt);
      for (std::size_t i = 0; i < m; ++i) {
        ens.beta[i][r] = full.eval.beta[i];
        ens.beta_star[i][r] = full.eval.beta_star[i];
        if (needs.alpha) ens.alpha[i][r] = (*full.eval.alpha)[i];
        if (needs.gamma) {
          ens.gamma[i][r] = (*full.eval.gamma)[i];
          ens.beta_expansion[i][r] = full.beta_expansion[i];
        }
        if (needs.lstat) {
          ens.lstat[i][r] = (*full.eval.lstat)[i];
          ens.qcount[i][r] = (*full.eval.q_count)[i];
        }
        if (needs.paired) ens.beta2[i][r] = (*full.beta2)[i];
      }
      if (needs.remainder) {
        double sup = 0.0;
        for (double v : full.remainder) sup = std::max(sup, std::fabs(v));
        ens.remainder_sup[r] = sup;
      }
    }
  });

  std::uint64_t total = 0;
  for (std::uint64_t d : draws) total += d;
  ens.rng_draws = total;
  return ens;
}

MomentReport star_mean_report(const Ensemble& ens, oracle::Engine& direct,
                              const Tolerances& tol) {
  require_se_validity(ens);
  MomentReport report;
  report.target = "residual_star_mean";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    const auto est = estimate_mean(ens.beta_star[i]);
    const double oracle_value = direct.limit_mean(ens.grid[i]);
    report.cells.push_back(make_cell(ens.grid[i], ens.grid[i],
                                     "residual_star_mean", est.mean, est.se,
                                     oracle_value, tol));
  }
  finalize_report(report, tol);
  return report;
}

MomentReport variance_report(const Ensemble& ens, oracle::Engine& direct,
                             const Tolerances& tol) {
  require_se_validity(ens);
  MomentReport report;
  report.target = "residual_variance";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    const auto est = estimate_variance(ens.beta[i]);
    const double oracle_value = direct.residual_cov(ens.grid[i], ens.grid[i]);
    report.cells.push_back(make_cell(ens.grid[i], ens.grid[i],
                                     "residual_variance", est.variance, est.se,
                                     oracle_value, tol));
  }
  finalize_report(report, tol);
  return report;
}

MomentReport covariance_report(const Ensemble& ens, oracle::Engine& direct,
                               const Tolerances& tol) {
  require_se_validity(ens);
  MomentReport report;
  report.target = "residual_covariance";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    for (std::size_t j = i; j < ens.grid.size(); ++j) {
      const auto est = estimate_covariance(ens.beta[i], ens.beta[j]);
      const double oracle_value = direct.residual_cov(ens.grid[i], ens.grid[j]);
      report.cells.push_back(make_cell(ens.grid[i], ens.grid[j],
                                       "residual_covariance", est.covariance,
                                       est.se, oracle_value, tol));
    }
  }
  finalize_report(report, tol);
  return report;
}

MomentReport combined_covariance_report(const Ensemble& ens,
                                        oracle::Engine& expansion,
                                        const Tolerances& tol) {
  require_se_validity(ens);
  if (ens.gamma.empty()) {
    throw ConfigError("combined covariance report: ensemble lacks the combined process");
  }
  MomentReport report;
  report.target = "combined_covariance";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    for (std::size_t j = i; j < ens.grid.size(); ++j) {
      const auto est = estimate_covariance(ens.gamma[i], ens.gamma[j]);
      const double oracle_value = expansion.combined_cov(ens.grid[i], ens.grid[j]);
      report.cells.push_back(make_cell(ens.grid[i], ens.grid[j],
                                       "combined_covariance", est.covariance,
                                       est.se, oracle_value, tol));
    }
  }
  finalize_report(report, tol);
  return report;
}

MomentReport cross_pilot_report(const Ensemble& ens, oracle::Engine& expansion,
                                const Tolerances& tol) {
  require_se_validity(ens);
  if (ens.alpha.empty() || ens.beta_expansion.empty()) {
    throw ConfigError("cross pilot: ensemble lacks score/expansion series");
  }
  MomentReport report;
  report.target = "cross_pilot";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    const auto est = estimate_covariance(ens.alpha[i], ens.beta_expansion[i]);
    const double oracle_value =
        expansion.cross_cov_sym(ens.grid[i], ens.grid[i]);
    report.cells.push_back(make_cell(ens.grid[i], ens.grid[i], "cross_pilot",
                                     2.0 * est.covariance, 2.0 * est.se,
                                     oracle_value, tol));
  }
  finalize_report(report, tol);
  return report;
}

MomentReport paired_covariance_report(const Ensemble& ens,
                                      oracle::Engine& first_direct,
                                      oracle::Engine& second_direct,
                                      const Tolerances& tol) {
  require_se_validity(ens);
  if (ens.beta2.empty()) {
    throw ConfigError("paired covariance report: ensemble lacks the second process");
  }
  MomentReport report;
  report.target = "paired_covariance";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    for (std::size_t j = 0; j < ens.grid.size(); ++j) {
      const auto est = estimate_covariance(ens.beta[i], ens.beta2[j]);
      const double oracle_value = oracle::paired_residual_cov(
          first_direct, second_direct, ens.grid[i], ens.grid[j]);
      report.cells.push_back(make_cell(ens.grid[i], ens.grid[j],
                                       "paired_covariance", est.covariance,
                                       est.se, oracle_value, tol));
    }
  }
  finalize_report(report, tol);
  return report;
}

MomentReport lstat_mean_report(const Ensemble& ens, oracle::Engine& expansion,
                               const Tolerances& tol) {
  require_se_validity(ens);
  if (ens.lstat.empty()) {
    throw ConfigError("lstat report: ensemble lacks the L-statistic series");
  }
  MomentReport report;
  report.target = "lstat_mean";
  for (std::size_t i = 0; i < ens.grid.size(); ++i) {
    const auto est = estimate_mean(ens.lstat[i]);
    const double oracle_value = expansion.lstat_limit(ens.grid[i]);
    report.cells.push_back(make_cell(ens.grid[i], ens.grid[i], "lstat_mean",
                                     est.mean, est.se, oracle_value, tol));
  }
  finalize_report(report, tol);
  return report;
}

FddReport fdd_normality(const Ensemble& ens, const std::vector<std::size_t>& idx,
                        const std::vector<double>& coefficients,
                        oracle::Engine& direct, double p_min) {
  if (idx.size() != coefficients.size() || idx.empty()) {
    throw ConfigError("fdd: times and coefficients must align");
  }
  FddReport report;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= ens.grid.size()) throw ConfigError("fdd: time index out of range");
    report.times.push_back(ens.grid[idx[k]]);
  }
  report.coefficients = coefficients;

  double sigma2 = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      sigma2 += coefficients[a] * coefficients[b] *
                direct.residual_cov(ens.grid[idx[a]], ens.grid[idx[b]]);
    }
  }
  report.sigma2_oracle = sigma2;

  const double sqrt_n = std::sqrt(static_cast<double>(ens.n));
  double mean_shift = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    mean_shift += coefficients[a] * direct.limit_mean(ens.grid[idx[a]]) / sqrt_n;
  }
  report.mean_shift = mean_shift;

  if (!(sigma2 > 1e-10)) {
    report.degenerate = true;
    report.pass = true;  // a notice, not a failure
    return report;
  }

  const double sd = std::sqrt(sigma2);
  std::vector<double> transformed(ens.R);
  for (std::size_t r = 0; r < ens.R; ++r) {
    double v = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      v += coefficients[a] * ens.beta[idx[a]][r];
    }
    transformed[r] = normal_cdf((v - mean_shift) / sd);
  }
  report.ks_d = ks_statistic(transformed);
  report.ks_p = ks_p_value(report.ks_d, ens.R);
  report.ad_a2 = ad_statistic(transformed);
  report.ad_p = ad_p_value(report.ad_a2, ens.R);
  report.pass = report.ks_p > p_min;
  return report;
}

DecayReport remainder_decay(const ModelSpec& model, const WeightSpec& weights,
                            const TimeGrid& grid,
                            const std::vector<std::size_t>& ladder,
                            std::size_t R, std::uint64_t seed, int workers) {
  if (ladder.size() < 3) throw ConfigError("remainder decay: need >= 3 ladder rungs");
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    if (ladder[k] <= ladder[k - 1]) {
      throw ConfigError("remainder decay: ladder must be strictly increasing");
    }
  }
  weights.lstat_or_throw();

  DecayReport report;
  report.ladder = ladder;

  EnsembleNeeds needs;
  needs.remainder = true;
  for (std::size_t rung = 0; rung < ladder.size(); ++rung) {
    // Disjoint substream blocks per rung keep the rungs independent.
    const std::uint64_t stream_base = rung * (1ull << 32);
    std::vector<double> sups(R);
    std::vector<std::uint64_t> draws(R, 0);
    EvalOptions opt;
    opt.want_remainder = true;
    parallel_ranges(R, workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        const PathSample sample = sample_paths(model, ladder[rung], grid, seed,
                                               stream_base + r, &draws[r]);
        const FullEvaluation full = evaluate_replication(sample, weights, opt);
        double sup = 0.0;
        for (double v : full.remainder) sup = std::max(sup, std::fabs(v));
        sups[r] = sup;
      }
    });
    report.medians.push_back(median(std::move(sups)));
    for (std::uint64_t d : draws) report.rng_draws += d;
  }

  report.strictly_decreasing = true;
  for (std::size_t k = 1; k < report.medians.size(); ++k) {
    if (!(report.medians[k] < report.medians[k - 1])) {
      report.strictly_decreasing = false;
    }
  }
  const double first = report.medians.front();
  const double last = report.medians.back();
  report.ratio_last_first = first > 0.0 ? last / first : 0.0;
  if (first > 1e-300 && last > 1e-300) {
    report.loglog_slope =
        (std::log(last) - std::log(first)) /
        (std::log(static_cast<double>(ladder.back())) -
         std::log(static_cast<double>(ladder.front())));
  }
  return report;
}

namespace {

// Copula of the limiting bridge pair: joint CDF of the coupled uniforms.
double copula_cdf(Copula copula, double rho, double s, double t) {
  switch (copula) {
    case Copula::Independent: return s * t;
    case Copula::Comonotone: return std::min(s, t);
    case Copula::Gaussian:
      return bivariate_normal_cdf(normal_quantile(s), normal_quantile(t), rho);
  }
  return s * t;
}

}  // namespace

BridgeReport bridge_check(const BridgeConfig& config) {
  if (config.n < 100) throw ConfigError("bridge check: need n >= 100");
  if (config.R < 2) throw ConfigError("bridge check: need R >= 2");
  if (config.lattice < 2) throw ConfigError("bridge check: lattice too small");
  if (config.copula == Copula::Gaussian &&
      !(config.rho > -1.0 && config.rho < 1.0)) {
    throw ConfigError("bridge check: gaussian copula needs |rho| < 1");
  }

  const std::size_t k = config.lattice;
  const std::size_t n = config.n;
  const std::size_t R = config.R;
  BridgeReport report;
  report.axis.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    report.axis[i] = static_cast<double>(i + 1) / static_cast<double>(k + 1);
  }

  // Per-replication quantile-process values at the axis points, plus the
  // empirical/quantile sup gap per margin.
  std::vector<std::vector<double>> eps1(k, std::vector<double>(R));
  std::vector<std::vector<double>> eps2(k, std::vector<double>(R));
  std::vector<double> bk1(R), bk2(R);
  std::vector<std::uint64_t> draws(R, 0);

  parallel_ranges(R, config.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> u(n), v(n);
    for (std::size_t r = begin; r < end; ++r) {
      SubstreamRng rng(config.seed, r);
      for (std::size_t j = 0; j < n; ++j) {
        switch (config.copula) {
          case Copula::Independent:
            u[j] = rng.next_uniform();
            v[j] = rng.next_uniform();
            break;
          case Copula::Comonotone:
            u[j] = rng.next_uniform();
            v[j] = u[j];
            break;
          case Copula::Gaussian: {
            const double z1 = rng.next_normal();
            const double z2 = rng.next_normal();
            u[j] = normal_cdf(z1);
            v[j] = normal_cdf(config.rho * z1 +
                              std::sqrt(1.0 - config.rho * config.rho) * z2);
            break;
          }
        }
      }
      draws[r] = rng.draw_count();
      std::sort(u.begin(), u.end());
      std::sort(v.begin(), v.end());
      const double sqrt_n = std::sqrt(static_cast<double>(n));
      auto margin = [&](const std::vector<double>& sorted,
                        std::vector<std::vector<double>>& eps_out,
                        std::size_t rep) {
        double bk_sup = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const double s = report.axis[i];
          // Left-continuous inverse: the ceil(ns)-th order statistic.
          const std::size_t pos = static_cast<std::size_t>(
              std::ceil(s * static_cast<double>(n)) - 1.0);
          const double quantile_value = sorted[std::min(pos, n - 1)];
          const double eps = sqrt_n * (quantile_value - s);
          eps_out[i][rep] = eps;
          const double ecdf =
              static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), s) -
                                  sorted.begin()) /
              static_cast<double>(n);
          const double alpha = sqrt_n * (ecdf - s);
          bk_sup = std::max(bk_sup, std::fabs(alpha + eps));
        }
        return bk_sup;
      };
      bk1[r] = margin(u, eps1, r);
      bk2[r] = margin(v, eps2, r);
    }
  });

  report.cov11.resize(k * k);
  report.cov22.resize(k * k);
  report.cov12.resize(k * k);
  report.theory_margin.resize(k * k);
  report.theory_cross.resize(k * k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const double s = report.axis[a];
      const double t = report.axis[b];
      report.cov11[a * k + b] = estimate_covariance(eps1[a], eps1[b]).covariance;
      report.cov22[a * k + b] = estimate_covariance(eps2[a], eps2[b]).covariance;
      report.cov12[a * k + b] = estimate_covariance(eps1[a], eps2[b]).covariance;
      report.theory_margin[a * k + b] = std::min(s, t) - s * t;
      report.theory_cross[a * k + b] =
          copula_cdf(config.copula, config.rho, s, t) - s * t;
    }
  }
  for (std::size_t i = 0; i < k * k; ++i) {
    report.sup_dev11 = std::max(report.sup_dev11,
                                std::fabs(report.cov11[i] - report.theory_margin[i]));
    report.sup_dev22 = std::max(report.sup_dev22,
                                std::fabs(report.cov22[i] - report.theory_margin[i]));
    report.sup_dev12 = std::max(report.sup_dev12,
                                std::fabs(report.cov12[i] - report.theory_cross[i]));
  }
  report.bk_sup_median1 = median(bk1);
  report.bk_sup_median2 = median(bk2);
  std::uint64_t total = 0;
  for (std::uint64_t d : draws) total += d;
  report.rng_draws = total;
  return report;
}

}  // namespace emproc::mc
