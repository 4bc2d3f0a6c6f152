#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emproc/empirical.hpp"
#include "emproc/model.hpp"
#include "emproc/oracle.hpp"
#include "emproc/time_grid.hpp"
#include "emproc/weights.hpp"

namespace emproc::mc {

struct EnsembleNeeds {
  bool alpha = false;
  bool gamma = false;
  bool lstat = false;
  bool remainder = false;
  bool paired = false;
};

// Replicated process evaluations, stored per grid point over the replication
// index so cross-replication reductions are contiguous. Content is a pure
// function of (model, weights, grid, n, R, seed); the worker count only
// partitions the replication range.
struct Ensemble {
  ModelSpec model;
  WeightSpec weights;
  std::optional<WeightSpec> weights2;
  TimeGrid grid{{0.5, 1.0}, 1.0};
  std::size_t n = 0;
  std::size_t R = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  std::vector<std::vector<double>> beta;       // [grid][rep], 1/sqrt(n) scale
  std::vector<std::vector<double>> beta_star;  // [grid][rep]
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<double>> beta_expansion;  // expansion-weight residual
  std::vector<std::vector<double>> lstat;
  std::vector<std::vector<double>> qcount;
  std::vector<std::vector<double>> beta2;     // second weight family
  std::vector<double> remainder_sup;          // per replication
  std::vector<double> eta;                    // per grid point
  std::uint64_t rng_draws = 0;
};

Ensemble run_replications(const ModelSpec& model, const WeightSpec& weights,
                          const TimeGrid& grid, std::size_t n, std::size_t R,
                          std::uint64_t seed, const EnsembleNeeds& needs,
                          int workers = 1,
                          const WeightSpec* weights2 = nullptr,
                          oracle::QuadratureOptions quad = {},
                          std::string config_digest = {});

// Pass rule per cell: |mc - oracle| <= z_max * se + bias_slack. The z column
// reports the raw (mc - oracle)/se; the drift statistic averages the
// slack-adjusted |z| so an O(1/n) bias does not masquerade as systematic
// error.
struct Tolerances {
  double z_max = 4.0;
  double bias_slack = 0.0;  // typically 2/n
  double mean_abs_z_max = 0.0;  // 0 disables the drift rule
};

struct ReportCell {
  double t = 0.0;
  double s = 0.0;
  std::string statistic;
  double mc = 0.0;
  double se = 0.0;
  double oracle = 0.0;
  double z = 0.0;
  double bias = 0.0;
  bool pass = true;
};

struct MomentReport {
  std::string target;
  std::vector<ReportCell> cells;
  double mean_abs_z_adjusted = 0.0;  // drift statistic, gates the run
  double mean_abs_z_raw = 0.0;       // reported for transparency
  bool pass = false;
  std::vector<std::string> notes;
};

MomentReport star_mean_report(const Ensemble& ens, oracle::Engine& direct,
                              const Tolerances& tol);
MomentReport variance_report(const Ensemble& ens, oracle::Engine& direct,
                             const Tolerances& tol);
MomentReport covariance_report(const Ensemble& ens, oracle::Engine& direct,
                               const Tolerances& tol);
MomentReport combined_covariance_report(const Ensemble& ens,
                                        oracle::Engine& expansion,
                                        const Tolerances& tol);
// Diagonal pilot for the cross term: 2 * Cov(alpha(t), beta_exp(t)) against
// the symmetrized oracle cross covariance.
MomentReport cross_pilot_report(const Ensemble& ens, oracle::Engine& expansion,
                                const Tolerances& tol);
MomentReport paired_covariance_report(const Ensemble& ens,
                                      oracle::Engine& first_direct,
                                      oracle::Engine& second_direct,
                                      const Tolerances& tol);
// L-statistic means against the limit J(t) (slack covers the O(1/sqrt n)
// term of the expansion remainder divided by sqrt n).
MomentReport lstat_mean_report(const Ensemble& ens, oracle::Engine& expansion,
                               const Tolerances& tol);

// Linear-combination normality check, standardized by the oracle covariance
// and recentred by the exact finite-n mean.
struct FddReport {
  std::vector<double> times;
  std::vector<double> coefficients;
  double sigma2_oracle = 0.0;
  double mean_shift = 0.0;
  double ks_d = 0.0;
  double ks_p = 0.0;
  double ad_a2 = 0.0;
  double ad_p = 0.0;
  bool degenerate = false;
  bool pass = false;
};
FddReport fdd_normality(const Ensemble& ens, const std::vector<std::size_t>& idx,
                        const std::vector<double>& coefficients,
                        oracle::Engine& direct, double p_min);

// Median sup-norm of the expansion remainder along a ladder of sample sizes.
struct DecayReport {
  std::vector<std::size_t> ladder;
  std::vector<double> medians;
  double ratio_last_first = 0.0;
  double loglog_slope = 0.0;
  bool strictly_decreasing = false;
  std::uint64_t rng_draws = 0;
};
DecayReport remainder_decay(const ModelSpec& model, const WeightSpec& weights,
                            const TimeGrid& grid,
                            const std::vector<std::size_t>& ladder,
                            std::size_t R, std::uint64_t seed, int workers = 1);

// Bivariate quantile-process lab: both marginal quantile processes of a
// coupled uniform pair, their covariance surfaces against the Brownian-bridge
// forms, and the empirical/quantile sup gap per margin.
enum class Copula { Independent, Comonotone, Gaussian };

struct BridgeConfig {
  Copula copula = Copula::Independent;
  double rho = 0.0;  // Gaussian copula correlation
  std::size_t n = 1000;
  std::size_t R = 500;
  std::uint64_t seed = 1;
  std::size_t lattice = 15;  // points per axis, at i/(lattice+1)
  int workers = 1;
};

struct BridgeReport {
  std::vector<double> axis;
  std::vector<double> cov11, cov22, cov12;             // lattice x lattice
  std::vector<double> theory_margin, theory_cross;     // same layout
  double sup_dev11 = 0.0, sup_dev22 = 0.0, sup_dev12 = 0.0;
  double bk_sup_median1 = 0.0, bk_sup_median2 = 0.0;
  std::uint64_t rng_draws = 0;
};

BridgeReport bridge_check(const BridgeConfig& config);

}  // namespace emproc::mc
