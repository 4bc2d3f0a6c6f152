#pragma once

#include <map>
#include <memory>
#include <vector>

#include "emproc/model.hpp"
#include "emproc/quadrature.hpp"
#include "emproc/time_grid.hpp"
#include "emproc/weights.hpp"

namespace emproc::oracle {

// Which weight family feeds the residual-process functionals: the direct
// process weight q(t, .), or the expansion weight c'(G_t) q0 1(. <= Z)
// induced by the L-statistic block.
enum class WeightRole { Direct, Expansion };

struct QuadratureOptions {
  double tol_1d = 1e-9;
  double tol_2d = 1e-8;
};

// Deterministic quadrature evaluations of every limit quantity. All
// integrals run on the probability scale w = G_t(y) in (0,1), so unbounded
// supports never appear; per-time tail-mass cumulatives are cached because
// covariance surfaces reuse them across cells.
class Engine {
 public:
  Engine(ModelSpec model, WeightSpec weights, WeightRole role,
         QuadratureOptions opt = {});

  // E_t q - E_t qG: the exact finite-n mean of the sqrt(n)-scaled residual
  // process.
  double limit_mean(double t);
  // E_t G q = integral of w * q~(w).
  double weighted_cdf_mean(double t);
  // Second moment of the upper-tail mass A_t(u) = integral_{x>=u} q dG_t.
  double tail_second_moment(double t);
  // E[A_t(Y(t)) A_s(Y(s))] under the bivariate law.
  double tail_cross_moment(double t, double s);
  // Limit covariance of the residual process: tail cross moment minus the
  // product of weighted CDF means.
  double residual_cov(double t, double s);
  // Limit covariance of the centered score process.
  double score_cov(double t, double s);
  // One-sided score/residual cross term and its symmetrization.
  double score_residual_cross(double t, double s);
  double cross_cov_sym(double t, double s);
  // Full covariance of the combined process (requires Expansion role).
  double combined_cov(double t, double s);
  // L-statistic limit J(t) = integral of c(G_t) q0 1(. <= Z) dG_t.
  double lstat_limit(double t);
  // Symmetric limit variance of the increment beta(t) - beta(s).
  double increment_variance(double t, double s);

  const ModelSpec& model() const { return model_; }
  const QuadratureOptions& options() const { return opt_; }
  // Tail mass evaluated on the probability scale.
  double unit_tail(double t, double w);
  double threshold_on_unit(double t);

 private:
  struct TimeCtx {
    double wz = 1.0;  // threshold mapped through the marginal CDF
    std::shared_ptr<CumulativeIntegral> cum_weight;
    double egq = 0.0;
    bool has_eta = false;
    double eta = 0.0;
  };
  TimeCtx& ctx(double t);
  double score_on_unit(double t, double w) const;

  // E[F(W_t, W_s)] for the probability-integral pair; dispatches on the
  // model's bivariate structure.
  double bivariate_expectation(double t, double s,
                               const std::function<double(double, double)>& f,
                               const std::vector<double>& breaks_first,
                               const std::vector<double>& breaks_second);

  ModelSpec model_;
  WeightSpec weights_;
  WeightRole role_;
  QuadratureOptions opt_;
  std::map<double, TimeCtx> cache_;
};

enum class SurfaceKind { Residual, Score, CrossSym, CombinedTotal, Paired };

struct CovarianceSurface {
  TimeGrid grid;
  SurfaceKind kind;
  std::vector<double> values;  // m x m row-major

  double at(std::size_t i, std::size_t j) const {
    return values[i * grid.size() + j];
  }
  bool symmetric_kind() const { return kind != SurfaceKind::Paired; }
  // Smallest eigenvalue via cyclic Jacobi; meaningful for symmetric kinds.
  double min_eigenvalue() const;
};

CovarianceSurface residual_surface(Engine& engine, const TimeGrid& grid);
CovarianceSurface score_surface(Engine& engine, const TimeGrid& grid);
CovarianceSurface cross_surface(Engine& engine, const TimeGrid& grid);
CovarianceSurface combined_surface(Engine& engine, const TimeGrid& grid);

// Limit cross-covariance of two residual processes sharing the sample,
// Cov(beta_1(t), beta_2(s)); bilinear in the two weight families.
double paired_residual_cov(Engine& first, Engine& second, double t, double s);
CovarianceSurface paired_surface(Engine& first, Engine& second,
                                 const TimeGrid& grid);

struct TightnessReport {
  double delta = 0.0;
  double condition_r = 0.0;
  struct PairEntry {
    double t;
    double s;
    double increment_variance;
  };
  std::vector<PairEntry> pairs;
  double fitted_exponent = 0.0;
  double fitted_k0 = 0.0;
  bool degenerate = false;        // all increments numerically zero
  bool satisfied_on_grid = false; // fitted exponent >= 1 + r - 0.05
};

// Scans increment variances over all grid pairs with |t-s| <= delta and fits
// a power law; certifies the Hoelder-type increment condition on the grid.
TightnessReport holder_scan(Engine& engine, const TimeGrid& grid, double delta,
                            double condition_r);

// Convenience single-call wrappers.
double limit_mean(const ModelSpec& m, const WeightSpec& w, double t,
                  WeightRole role = WeightRole::Direct,
                  QuadratureOptions opt = {});
double tail_second_moment(const ModelSpec& m, const WeightSpec& w, double t,
                          WeightRole role = WeightRole::Direct,
                          QuadratureOptions opt = {});
double tail_cross_moment(const ModelSpec& m, const WeightSpec& w, double t,
                         double s, WeightRole role = WeightRole::Direct,
                         QuadratureOptions opt = {});
double residual_cov(const ModelSpec& m, const WeightSpec& w, double t, double s,
                    WeightRole role = WeightRole::Direct,
                    QuadratureOptions opt = {});
double score_cov(const ModelSpec& m, const WeightSpec& w, double t, double s,
                 QuadratureOptions opt = {});
double cross_cov_sym(const ModelSpec& m, const WeightSpec& w, double t,
                     double s, QuadratureOptions opt = {});
double combined_cov(const ModelSpec& m, const WeightSpec& w, double t, double s,
                    QuadratureOptions opt = {});
double lstat_limit(const ModelSpec& m, const WeightSpec& w, double t,
                   QuadratureOptions opt = {});
double increment_variance(const ModelSpec& m, const WeightSpec& w, double t,
                          double s, WeightRole role = WeightRole::Direct,
                          QuadratureOptions opt = {});

}  // namespace emproc::oracle
