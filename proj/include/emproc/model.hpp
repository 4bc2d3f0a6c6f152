#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emproc/rng.hpp"
#include "emproc/time_grid.hpp"

namespace emproc {

// Process families with analytically known marginal and bivariate laws, so
// every limit integral has an independent quadrature (or closed-form) route:
//
//   ComonotoneUniform   Y(t) = U for one uniform driver U; all times carry the
//                       same uniform marginal and the joint CDF is the upper
//                       Frechet bound min(G_t(u), G_s(v)).
//   BrownianMotion      Y(t) ~ N(0, t); corr(Y(t), Y(s)) = sqrt(min/max).
//   OrnsteinUhlenbeck   stationary, standard normal marginal,
//                       corr = exp(-|t-s|/scale).
//   IndependentUniform  Y(t) independent uniforms across grid points. Not a
//                       path model: finite-dimensional checks only.
enum class ModelKind {
  ComonotoneUniform,
  BrownianMotion,
  OrnsteinUhlenbeck,
  IndependentUniform,
};

struct ModelSpec {
  ModelKind kind = ModelKind::ComonotoneUniform;
  double ou_scale = 1.0;  // correlation time scale, OrnsteinUhlenbeck only

  static ModelSpec comonotone() { return {ModelKind::ComonotoneUniform, 1.0}; }
  static ModelSpec brownian() { return {ModelKind::BrownianMotion, 1.0}; }
  static ModelSpec ornstein_uhlenbeck(double scale);
  static ModelSpec independent() { return {ModelKind::IndependentUniform, 1.0}; }

  // Independent fields have no path-space law; increment and tightness
  // diagnostics refuse to run on them.
  bool is_path_model() const { return kind != ModelKind::IndependentUniform; }
  bool has_uniform_marginal() const {
    return kind == ModelKind::ComonotoneUniform ||
           kind == ModelKind::IndependentUniform;
  }

  std::string name() const;

  double marginal_cdf(double t, double x) const;
  double marginal_quantile(double t, double p) const;
  double joint_cdf(double t, double s, double u, double v) const;

  // Correlation of the underlying Gaussian pair (Gaussian models), or of the
  // shared driver convention (1 for comonotone, 0 for independent at t != s).
  double time_correlation(double t, double s) const;

  void validate_grid(const TimeGrid& grid) const;

  bool operator==(const ModelSpec&) const = default;
};

// One replication batch: values(j,i) = Y_j(t_i) for n independent paths over
// the grid. Columns with tied values are rejected downstream; continuous
// marginals make ties a data error, never a case to midrank through.
struct PathSample {
  ModelSpec model;
  TimeGrid grid;
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x m

  double at(std::size_t j, std::size_t i) const { return values[j * grid.size() + i]; }
  std::size_t columns() const { return grid.size(); }

  // Column i copied out (replication-major storage favors row access).
  std::vector<double> column(std::size_t i) const;
};

// Draws n independent paths; deterministic given (model, n, grid, seed,
// stream). Consumes a fixed number of variates per path, all from the
// substream addressed by `stream`.
PathSample sample_paths(const ModelSpec& model, std::size_t n,
                        const TimeGrid& grid, std::uint64_t seed,
                        std::uint64_t stream, std::uint64_t* draws = nullptr);

}  // namespace emproc
