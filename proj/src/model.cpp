#include "emproc/model.hpp"

#include <cmath>
#include <stdexcept>

#include "emproc/errors.hpp"
#include "emproc/special.hpp"

namespace emproc {

ModelSpec ModelSpec::ornstein_uhlenbeck(double scale) {
  if (!(scale > 0.0)) {
    throw ConfigError("ornstein-uhlenbeck: correlation scale must be positive");
  }
  return {ModelKind::OrnsteinUhlenbeck, scale};
}

std::string ModelSpec::name() const {
  switch (kind) {
    case ModelKind::ComonotoneUniform: return "comonotone";
    case ModelKind::BrownianMotion: return "brownian";
    case ModelKind::OrnsteinUhlenbeck: return "ou";
    case ModelKind::IndependentUniform: return "independent";
  }
  return "unknown";
}

double ModelSpec::marginal_cdf(double t, double x) const {
  switch (kind) {
    case ModelKind::ComonotoneUniform:
    case ModelKind::IndependentUniform:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return x;
    case ModelKind::BrownianMotion:
      if (!(t > 0.0)) throw ConfigError("brownian motion: marginal needs t > 0");
      return normal_cdf(x / std::sqrt(t));
    case ModelKind::OrnsteinUhlenbeck:
      return normal_cdf(x);
  }
  throw ConfigError("unknown model kind");
}

double ModelSpec::marginal_quantile(double t, double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("marginal_quantile: p must lie in (0,1)");
  }
  switch (kind) {
    case ModelKind::ComonotoneUniform:
    case ModelKind::IndependentUniform:
      return p;
    case ModelKind::BrownianMotion:
      if (!(t > 0.0)) throw ConfigError("brownian motion: quantile needs t > 0");
      return std::sqrt(t) * normal_quantile(p);
    case ModelKind::OrnsteinUhlenbeck:
      return normal_quantile(p);
  }
  throw ConfigError("unknown model kind");
}

double ModelSpec::time_correlation(double t, double s) const {
  if (t == s) return 1.0;
  switch (kind) {
    case ModelKind::ComonotoneUniform:
      return 1.0;
    case ModelKind::IndependentUniform:
      return 0.0;
    case ModelKind::BrownianMotion: {
      if (!(t > 0.0 && s > 0.0)) {
        throw ConfigError("brownian motion: correlation needs positive times");
      }
      return std::sqrt(std::min(t, s) / std::max(t, s));
    }
    case ModelKind::OrnsteinUhlenbeck:
      return std::exp(-std::fabs(t - s) / ou_scale);
  }
  throw ConfigError("unknown model kind");
}

double ModelSpec::joint_cdf(double t, double s, double u, double v) const {
  const double gu = marginal_cdf(t, u);
  const double gv = marginal_cdf(s, v);
  if (t == s) return std::min(gu, gv);  // same random variable
  switch (kind) {
    case ModelKind::ComonotoneUniform:
      return std::min(gu, gv);
    case ModelKind::IndependentUniform:
      return gu * gv;
    case ModelKind::BrownianMotion:
    case ModelKind::OrnsteinUhlenbeck: {
      const double rho = time_correlation(t, s);
      if (gu <= 0.0 || gv <= 0.0) return 0.0;
      if (gu >= 1.0) return gv;
      if (gv >= 1.0) return gu;
      return bivariate_normal_cdf(normal_quantile(gu), normal_quantile(gv), rho);
    }
  }
  throw ConfigError("unknown model kind");
}

void ModelSpec::validate_grid(const TimeGrid& grid) const {
  // TimeGrid already excludes t <= 0; Gaussian models additionally need a
  // finite horizon only, so everything on (0, T] is admissible.
  for (double t : grid.points()) {
    if (!(t > 0.0)) throw ConfigError("grid invalid for model: t must be > 0");
  }
}

std::vector<double> PathSample::column(std::size_t i) const {
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = values[j * grid.size() + i];
  return out;
}

PathSample sample_paths(const ModelSpec& model, std::size_t n,
                        const TimeGrid& grid, std::uint64_t seed,
                        std::uint64_t stream, std::uint64_t* draws) {
  if (n < 1) throw ConfigError("sample_paths: need n >= 1");
  model.validate_grid(grid);

  const std::size_t m = grid.size();
  PathSample out{model, grid, n, std::vector<double>(n * m)};
  SubstreamRng rng(seed, stream);

  switch (model.kind) {
    case ModelKind::ComonotoneUniform: {
      for (std::size_t j = 0; j < n; ++j) {
        const double u = rng.next_uniform();
        for (std::size_t i = 0; i < m; ++i) out.values[j * m + i] = u;
      }
      break;
    }
    case ModelKind::IndependentUniform: {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
          out.values[j * m + i] = rng.next_uniform();
        }
      }
      break;
    }
    case ModelKind::BrownianMotion: {
      for (std::size_t j = 0; j < n; ++j) {
        double w = 0.0;
        double prev_t = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double t = grid[i];
          w += std::sqrt(t - prev_t) * rng.next_normal();
          prev_t = t;
          out.values[j * m + i] = w;
        }
      }
      break;
    }
    case ModelKind::OrnsteinUhlenbeck: {
      for (std::size_t j = 0; j < n; ++j) {
        double x = rng.next_normal();
        out.values[j * m + 0] = x;
        for (std::size_t i = 1; i < m; ++i) {
          const double a = std::exp(-(grid[i] - grid[i - 1]) / model.ou_scale);
          x = a * x + std::sqrt(1.0 - a * a) * rng.next_normal();
          out.values[j * m + i] = x;
        }
      }
      break;
    }
  }
  if (draws != nullptr) *draws += rng.draw_count();
  return out;
}

}  // namespace emproc
