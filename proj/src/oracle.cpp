#include "emproc/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "emproc/errors.hpp"
#include "emproc/special.hpp"

namespace emproc::oracle {

namespace {

double threshold_to_unit(const ModelSpec& model, const ThresholdSpec& z,
                         double t) {
  const double zt = z.eval(t);
  if (std::isinf(zt)) return zt > 0.0 ? 1.0 : 0.0;
  return model.marginal_cdf(t, zt);
}

// Quantile transforms are evaluated away from the exact endpoints; panel
// constructions sample them, and the integrands are bounded, so nudging by
// one ulp-scale epsilon changes nothing measurable.
double clamp_unit(double w) { return std::clamp(w, 1e-15, 1.0 - 1e-15); }

}  // namespace

Engine::Engine(ModelSpec model, WeightSpec weights, WeightRole role,
               QuadratureOptions opt)
    : model_(std::move(model)), weights_(std::move(weights)), role_(role),
      opt_(opt) {
  if (role_ == WeightRole::Expansion) weights_.lstat_or_throw();
}

double Engine::threshold_on_unit(double t) { return ctx(t).wz; }

double Engine::score_on_unit(double t, double w) const {
  const LStatSpec& ls = weights_.lstat_or_throw();
  const double wz = threshold_to_unit(model_, ls.z, t);
  if (w > wz) return 0.0;
  return ls.c.eval(w) * ls.q0.eval(model_.marginal_quantile(t, clamp_unit(w)));
}

Engine::TimeCtx& Engine::ctx(double t) {
  auto it = cache_.find(t);
  if (it != cache_.end()) return it->second;

  TimeCtx c;
  std::vector<double> breaks;
  std::function<double(double)> unit_weight;
  if (role_ == WeightRole::Direct) {
    c.wz = 1.0;
    unit_weight = [this, t](double w) {
      return weights_.q.eval(t, model_.marginal_quantile(t, clamp_unit(w)));
    };
  } else {
    const LStatSpec ls = weights_.lstat_or_throw();
    c.wz = threshold_to_unit(model_, ls.z, t);
    breaks.push_back(c.wz);
    unit_weight = [this, t, wz = c.wz, ls](double w) {
      if (w > wz) return 0.0;
      return ls.c.deriv(w) * ls.q0.eval(model_.marginal_quantile(t, clamp_unit(w)));
    };
  }
  const double cum_tol = std::min(opt_.tol_1d, opt_.tol_2d) * 1e-3;
  c.cum_weight = std::make_shared<CumulativeIntegral>(unit_weight, 0.0, 1.0,
                                                      cum_tol, breaks);
  c.egq = integrate([&](double w) { return w * unit_weight(w); }, 0.0, 1.0,
                    opt_.tol_1d, breaks);
  if (weights_.eta_defined()) {
    const LStatSpec ls = weights_.lstat_or_throw();
    const double wz = threshold_to_unit(model_, ls.z, t);
    c.has_eta = true;
    if (wz <= 0.0) {
      c.eta = 0.0;
    } else {
      c.eta = integrate(
          [&](double w) {
            return ls.c.eval(w) *
                   ls.q0.eval(model_.marginal_quantile(t, clamp_unit(w)));
          },
          0.0, wz, opt_.tol_1d);
    }
  }
  auto [pos, inserted] = cache_.emplace(t, std::move(c));
  return pos->second;
}

double Engine::unit_tail(double t, double w) {
  const TimeCtx& c = ctx(t);
  return c.cum_weight->suffix(w);
}

double Engine::limit_mean(double t) {
  TimeCtx& c = ctx(t);
  return c.cum_weight->total() - c.egq;
}

double Engine::weighted_cdf_mean(double t) { return ctx(t).egq; }

double Engine::tail_second_moment(double t) {
  TimeCtx& c = ctx(t);
  const auto& cum = *c.cum_weight;
  return integrate(
      [&](double w) {
        const double a = cum.suffix(w);
        return a * a;
      },
      0.0, 1.0, opt_.tol_1d, std::vector<double>{c.wz});
}

double Engine::lstat_limit(double t) {
  TimeCtx& c = ctx(t);
  if (!c.has_eta) throw ConfigError("oracle: lstat block (c, q0, z) missing");
  return c.eta;
}

double Engine::bivariate_expectation(
    double t, double s, const std::function<double(double, double)>& f,
    const std::vector<double>& breaks_first,
    const std::vector<double>& breaks_second) {
  // Diagonal and comonotone laws concentrate on W_t = W_s.
  if (t == s || model_.kind == ModelKind::ComonotoneUniform) {
    std::vector<double> breaks = breaks_first;
    breaks.insert(breaks.end(), breaks_second.begin(), breaks_second.end());
    return integrate([&](double w) { return f(w, w); }, 0.0, 1.0, opt_.tol_2d,
                     breaks);
  }
  if (model_.kind == ModelKind::IndependentUniform) {
    const double inner_tol = opt_.tol_2d / 16.0;
    auto outer = [&](double w) {
      return integrate([&](double z) { return f(w, z); }, 0.0, 1.0, inner_tol,
                       breaks_second);
    };
    return integrate(outer, 0.0, 1.0, opt_.tol_2d * (7.0 / 8.0), breaks_first);
  }
  // Gaussian pair: W_s | W_t via the conditional normal transform.
  const double r = model_.time_correlation(t, s);
  const double rc = std::sqrt(std::max(0.0, 1.0 - r * r));
  auto transformed = [&](double w, double z) {
    const double x = normal_quantile(w);
    const double v = normal_cdf(r * x + rc * normal_quantile(z));
    return f(w, std::clamp(v, 1e-300, 1.0 - 1e-16));
  };
  auto inner_breaks = [&](double w) {
    std::vector<double> out;
    if (rc <= 0.0) return out;
    for (double vb : breaks_second) {
      if (vb > 0.0 && vb < 1.0) {
        const double x = normal_quantile(w);
        const double zb =
            normal_cdf((normal_quantile(vb) - r * x) / rc);
        if (zb > 0.0 && zb < 1.0) out.push_back(zb);
      }
    }
    return out;
  };
  // Outer breakpoints enter through the integrand's first argument.
  const double inner_tol = opt_.tol_2d / 16.0;
  const double outer_tol = opt_.tol_2d * (7.0 / 8.0);
  auto outer = [&](double w) {
    return integrate([&](double z) { return transformed(w, z); }, 0.0, 1.0,
                     inner_tol, inner_breaks(w));
  };
  return integrate(outer, 0.0, 1.0, outer_tol, breaks_first);
}

double Engine::tail_cross_moment(double t, double s) {
  if (t == s) return tail_second_moment(t);
  // Symmetric by construction: evaluate on canonical order.
  if (s < t) return tail_cross_moment(s, t);
  TimeCtx& ct = ctx(t);
  TimeCtx& cs = ctx(s);
  const auto cum_t = ct.cum_weight;
  const auto cum_s = cs.cum_weight;
  return bivariate_expectation(
      t, s,
      [&](double w, double v) { return cum_t->suffix(w) * cum_s->suffix(v); },
      {ct.wz}, {cs.wz});
}

double Engine::residual_cov(double t, double s) {
  return tail_cross_moment(t, s) - weighted_cdf_mean(t) * weighted_cdf_mean(s);
}

double Engine::score_cov(double t, double s) {
  if (role_ != WeightRole::Expansion) {
    throw ConfigError("oracle: score covariance requires the expansion-weight engine");
  }
  if (s < t) return score_cov(s, t);
  const double eta_t = lstat_limit(t);
  const double eta_s = lstat_limit(s);
  TimeCtx& ct = ctx(t);
  TimeCtx& cs = ctx(s);
  return bivariate_expectation(
      t, s,
      [&](double w, double v) {
        return (score_on_unit(t, w) - eta_t) * (score_on_unit(s, v) - eta_s);
      },
      {ct.wz}, {cs.wz});
}

double Engine::score_residual_cross(double t, double s) {
  if (role_ != WeightRole::Expansion) {
    throw ConfigError(
        "oracle: score/residual cross term requires the expansion-weight engine");
  }
  const double eta_t = lstat_limit(t);
  TimeCtx& ct = ctx(t);
  TimeCtx& cs = ctx(s);
  const auto cum_s = cs.cum_weight;
  return bivariate_expectation(
      t, s,
      [&](double w, double v) {
        return (score_on_unit(t, w) - eta_t) * cum_s->suffix(v);
      },
      {ct.wz}, {cs.wz});
}

double Engine::cross_cov_sym(double t, double s) {
  return score_residual_cross(t, s) + score_residual_cross(s, t);
}

double Engine::combined_cov(double t, double s) {
  if (role_ != WeightRole::Expansion) {
    throw ConfigError(
        "oracle: combined covariance requires the expansion-weight engine");
  }
  return residual_cov(t, s) + score_cov(t, s) + cross_cov_sym(t, s);
}

double Engine::increment_variance(double t, double s) {
  if (t == s) return 0.0;
  const double v = residual_cov(t, t) + residual_cov(s, s) -
                   2.0 * residual_cov(t, s);
  if (v < -1e-8) {
    throw NumericalError("increment variance below -1e-8", std::fabs(v));
  }
  return v;
}

namespace {

template <typename F>
CovarianceSurface fill_symmetric(const TimeGrid& grid, SurfaceKind kind, F&& f) {
  const std::size_t m = grid.size();
  CovarianceSurface out{grid, kind, std::vector<double>(m * m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double v = f(grid[i], grid[j]);
      out.values[i * m + j] = v;
      out.values[j * m + i] = v;
    }
  }
  return out;
}

}  // namespace

CovarianceSurface residual_surface(Engine& engine, const TimeGrid& grid) {
  return fill_symmetric(grid, SurfaceKind::Residual, [&](double t, double s) {
    return engine.residual_cov(t, s);
  });
}

CovarianceSurface score_surface(Engine& engine, const TimeGrid& grid) {
  return fill_symmetric(grid, SurfaceKind::Score, [&](double t, double s) {
    return engine.score_cov(t, s);
  });
}

CovarianceSurface cross_surface(Engine& engine, const TimeGrid& grid) {
  return fill_symmetric(grid, SurfaceKind::CrossSym, [&](double t, double s) {
    return engine.cross_cov_sym(t, s);
  });
}

CovarianceSurface combined_surface(Engine& engine, const TimeGrid& grid) {
  return fill_symmetric(grid, SurfaceKind::CombinedTotal,
                        [&](double t, double s) { return engine.combined_cov(t, s); });
}

double paired_residual_cov(Engine& first, Engine& second, double t, double s) {
  if (!(first.model() == second.model())) {
    throw ConfigError("paired covariance: engines must share the model");
  }
  // E[A^1_t(W) A^2_s(V)] - (E_t G q1)(E_s G q2).
  const double egq1 = first.weighted_cdf_mean(t);
  const double egq2 = second.weighted_cdf_mean(s);
  const double wz1 = first.threshold_on_unit(t);
  const double wz2 = second.threshold_on_unit(s);
  // Bivariate expectation with mixed engines: replicate the dispatch with a
  // callable that pulls tails from each engine.
  const ModelSpec& model = first.model();
  const double tol = first.options().tol_2d;
  auto f = [&](double w, double v) {
    return first.unit_tail(t, w) * second.unit_tail(s, v);
  };
  double cross;
  if (t == s || model.kind == ModelKind::ComonotoneUniform) {
    cross = integrate([&](double w) { return f(w, w); }, 0.0, 1.0, tol,
                      std::vector<double>{wz1, wz2});
  } else if (model.kind == ModelKind::IndependentUniform) {
    cross = integrate_unit_square(
        f, tol, [&](double) { return std::vector<double>{wz2}; });
  } else {
    const double r = model.time_correlation(t, s);
    const double rc = std::sqrt(std::max(0.0, 1.0 - r * r));
    auto outer = [&](double w) {
      std::vector<double> zb;
      if (rc > 0.0 && wz2 > 0.0 && wz2 < 1.0) {
        const double z =
            normal_cdf((normal_quantile(wz2) - r * normal_quantile(w)) / rc);
        if (z > 0.0 && z < 1.0) zb.push_back(z);
      }
      return integrate(
          [&](double z) {
            const double v = normal_cdf(r * normal_quantile(w) +
                                        rc * normal_quantile(z));
            return f(w, std::clamp(v, 1e-300, 1.0 - 1e-16));
          },
          0.0, 1.0, tol / 16.0, zb);
    };
    cross = integrate(outer, 0.0, 1.0, tol * (7.0 / 8.0),
                      std::vector<double>{wz1});
  }
  return cross - egq1 * egq2;
}

CovarianceSurface paired_surface(Engine& first, Engine& second,
                                 const TimeGrid& grid) {
  const std::size_t m = grid.size();
  CovarianceSurface out{grid, SurfaceKind::Paired, std::vector<double>(m * m)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.values[i * m + j] = paired_residual_cov(first, second, grid[i], grid[j]);
    }
  }
  return out;
}

double CovarianceSurface::min_eigenvalue() const {
  // Cyclic Jacobi on a copy; the surfaces are small (grid-sized).
  const std::size_t m = grid.size();
  std::vector<double> a(values);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * m + j]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) off += at(i, j) * at(i, j);
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = at(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double tt = sign / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tt * tt + 1.0);
        const double s = tt * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double min_eig = at(0, 0);
  for (std::size_t i = 1; i < m; ++i) min_eig = std::min(min_eig, at(i, i));
  return min_eig;
}

TightnessReport holder_scan(Engine& engine, const TimeGrid& grid, double delta,
                            double condition_r) {
  if (!engine.model().is_path_model()) {
    throw ConfigError("tightness scan: model has no path-space law");
  }
  if (grid.size() < 10) {
    throw ConfigError("tightness scan: need at least 10 grid points");
  }
  double min_gap = grid[1] - grid[0];
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    min_gap = std::min(min_gap, grid[i + 1] - grid[i]);
  }
  if (!(delta > min_gap)) {
    throw ConfigError("tightness scan: delta must exceed the smallest spacing");
  }

  TightnessReport report;
  report.delta = delta;
  report.condition_r = condition_r;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double d = grid[j] - grid[i];
      if (d > delta) break;
      const double v = engine.increment_variance(grid[i], grid[j]);
      report.pairs.push_back({grid[i], grid[j], v});
    }
  }

  std::size_t active = 0;
  for (const auto& p : report.pairs) {
    if (p.increment_variance >= 1e-12) ++active;
  }
  if (active < 2) {
    // Nothing to fit: all increments numerically zero (or a lone pair).
    report.degenerate = true;
    return report;
  }

  // Least-squares power-law fit on the active pairs.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  double max_ratio = 0.0;
  for (const auto& p : report.pairs) {
    if (p.increment_variance < 1e-14) continue;
    const double d = p.s - p.t;
    const double lx = std::log(d);
    const double ly = std::log(p.increment_variance);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
    max_ratio = std::max(max_ratio,
                         p.increment_variance / std::pow(d, 1.0 + condition_r));
  }
  const double denom = static_cast<double>(count) * sxx - sx * sx;
  report.fitted_exponent =
      (static_cast<double>(count) * sxy - sx * sy) / denom;
  report.fitted_k0 = (2.0 / 3.0) * max_ratio;
  report.satisfied_on_grid =
      report.fitted_exponent >= 1.0 + condition_r - 0.05;
  return report;
}

double limit_mean(const ModelSpec& m, const WeightSpec& w, double t,
                  WeightRole role, QuadratureOptions opt) {
  Engine e(m, w, role, opt);
  return e.limit_mean(t);
}
double tail_second_moment(const ModelSpec& m, const WeightSpec& w, double t,
                          WeightRole role, QuadratureOptions opt) {
  Engine e(m, w, role, opt);
  return e.tail_second_moment(t);
}
double tail_cross_moment(const ModelSpec& m, const WeightSpec& w, double t,
                         double s, WeightRole role, QuadratureOptions opt) {
  Engine e(m, w, role, opt);
  return e.tail_cross_moment(t, s);
}
double residual_cov(const ModelSpec& m, const WeightSpec& w, double t, double s,
                    WeightRole role, QuadratureOptions opt) {
  Engine e(m, w, role, opt);
  return e.residual_cov(t, s);
}
double score_cov(const ModelSpec& m, const WeightSpec& w, double t, double s,
                 QuadratureOptions opt) {
  Engine e(m, w, WeightRole::Expansion, opt);
  return e.score_cov(t, s);
}
double cross_cov_sym(const ModelSpec& m, const WeightSpec& w, double t,
                     double s, QuadratureOptions opt) {
  Engine e(m, w, WeightRole::Expansion, opt);
  return e.cross_cov_sym(t, s);
}
double combined_cov(const ModelSpec& m, const WeightSpec& w, double t, double s,
                    QuadratureOptions opt) {
  Engine e(m, w, WeightRole::Expansion, opt);
  return e.combined_cov(t, s);
}
double lstat_limit(const ModelSpec& m, const WeightSpec& w, double t,
                   QuadratureOptions opt) {
  Engine e(m, w, WeightRole::Expansion, opt);
  return e.lstat_limit(t);
}
double increment_variance(const ModelSpec& m, const WeightSpec& w, double t,
                          double s, WeightRole role, QuadratureOptions opt) {
  Engine e(m, w, role, opt);
  return e.increment_variance(t, s);
}

}  // namespace emproc::oracle
