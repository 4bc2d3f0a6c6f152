#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "emproc/errors.hpp"
#include "emproc/model.hpp"
#include "emproc/special.hpp"
#include "emproc/stats.hpp"

using namespace emproc;

namespace {
const TimeGrid kGrid({0.2, 0.8}, 1.0);
}

TEST_CASE("marginal cdf basics") {
  const ModelSpec uniform = ModelSpec::comonotone();
  CHECK(uniform.marginal_cdf(0.5, 0.25) == doctest::Approx(0.25));
  CHECK(uniform.marginal_cdf(0.5, -1.0) == 0.0);
  CHECK(uniform.marginal_cdf(0.5, 2.0) == 1.0);

  const ModelSpec bm = ModelSpec::brownian();
  CHECK(bm.marginal_cdf(4.0, 0.0) == doctest::Approx(0.5));
  CHECK(bm.marginal_cdf(1.0, 1.959964) == doctest::Approx(0.975).epsilon(1e-6));

  const ModelSpec ou = ModelSpec::ornstein_uhlenbeck(1.0);
  CHECK(ou.marginal_quantile(0.3, 0.5) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("marginal quantile round-trips") {
  for (const ModelSpec& model :
       {ModelSpec::comonotone(), ModelSpec::brownian(),
        ModelSpec::ornstein_uhlenbeck(0.7), ModelSpec::independent()}) {
    for (int i = 1; i <= 101; ++i) {
      const double p = static_cast<double>(i) / 102.0;
      const double x = model.marginal_quantile(0.8, p);
      CHECK(model.marginal_cdf(0.8, x) == doctest::Approx(p).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(ModelSpec::comonotone().marginal_quantile(0.5, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(ModelSpec::brownian().marginal_quantile(0.5, 1.0),
                  std::domain_error);
  CHECK(ModelSpec::comonotone().marginal_quantile(0.5, 0.7) == doctest::Approx(0.7));
}

TEST_CASE("joint cdf closed forms") {
  const ModelSpec com = ModelSpec::comonotone();
  CHECK(com.joint_cdf(0.2, 0.8, 0.3, 0.6) == doctest::Approx(0.3));
  const ModelSpec ind = ModelSpec::independent();
  CHECK(ind.joint_cdf(0.2, 0.8, 0.3, 0.6) == doctest::Approx(0.18));
  const ModelSpec bm = ModelSpec::brownian();
  for (double u : {-0.8, 0.1, 1.4}) {
    CHECK(bm.joint_cdf(0.7, 0.7, u, u) == doctest::Approx(bm.marginal_cdf(0.7, u)));
  }
  CHECK(bm.time_correlation(0.5, 2.0) == doctest::Approx(0.5));
  const ModelSpec ou = ModelSpec::ornstein_uhlenbeck(2.0);
  CHECK(ou.time_correlation(1.0, 2.0) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("joint cdf has the declared margins") {
  for (const ModelSpec& model :
       {ModelSpec::comonotone(), ModelSpec::brownian(),
        ModelSpec::ornstein_uhlenbeck(1.0), ModelSpec::independent()}) {
    const double t = 0.4, s = 0.9;
    for (double p : {0.1, 0.5, 0.9}) {
      const double u = model.marginal_quantile(t, p);
      const double far = model.marginal_quantile(s, 1.0 - 1e-14);
      CHECK(model.joint_cdf(t, s, u, far + 1.0) ==
            doctest::Approx(model.marginal_cdf(t, u)).epsilon(1e-10));
    }
  }
}

TEST_CASE("copula bounds hold on a 20x20 lattice for every model") {
  for (const ModelSpec& model :
       {ModelSpec::comonotone(), ModelSpec::brownian(),
        ModelSpec::ornstein_uhlenbeck(1.0), ModelSpec::independent()}) {
    const double t = 0.4, s = 0.9;
    for (int i = 1; i <= 20; ++i) {
      for (int j = 1; j <= 20; ++j) {
        const double u = model.marginal_quantile(t, i / 21.0);
        const double v = model.marginal_quantile(s, j / 21.0);
        const double gu = model.marginal_cdf(t, u);
        const double gv = model.marginal_cdf(s, v);
        const double joint = model.joint_cdf(t, s, u, v);
        CHECK(joint >= std::max(gu + gv - 1.0, 0.0) - 1e-10);
        CHECK(joint <= std::min(gu, gv) + 1e-10);
      }
    }
  }
}

TEST_CASE("comonotone sampling: one driver, identical PIT values") {
  const auto sample = sample_paths(ModelSpec::comonotone(), 3, kGrid, 7, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(sample.at(j, 0) == sample.at(j, 1));
  }
  // Probability-integral values agree across times (single uniform driver).
  const auto wide = sample_paths(ModelSpec::comonotone(), 50,
                                 TimeGrid({0.1, 0.5, 0.9}, 1.0), 11, 4);
  for (std::size_t j = 0; j < wide.n; ++j) {
    const double w0 = wide.model.marginal_cdf(0.1, wide.at(j, 0));
    for (std::size_t i = 1; i < 3; ++i) {
      CHECK(std::fabs(wide.model.marginal_cdf(wide.grid[i], wide.at(j, i)) - w0) <=
            1e-12);
    }
  }
}

TEST_CASE("sampling determinism: identical stream, bit-identical sample") {
  for (const ModelSpec& model :
       {ModelSpec::comonotone(), ModelSpec::brownian(),
        ModelSpec::ornstein_uhlenbeck(0.5), ModelSpec::independent()}) {
    const auto a = sample_paths(model, 20, kGrid, 123, 5);
    const auto b = sample_paths(model, 20, kGrid, 123, 5);
    CHECK(a.values == b.values);
    const auto c = sample_paths(model, 20, kGrid, 123, 6);
    CHECK(a.values != c.values);
  }
}

TEST_CASE("brownian sample mean at t=1 within the MC bound") {
  const TimeGrid grid({0.5, 1.0}, 1.0);
  const std::size_t n = 10000;
  const auto sample = sample_paths(ModelSpec::brownian(), n, grid, 2024, 0);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += sample.at(j, 1);
  CHECK(std::fabs(sum / static_cast<double>(n)) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("PIT of sampled values is uniform (KS at the 1% level)") {
  const std::size_t n = 10000;
  const TimeGrid grid({0.5, 1.0}, 1.0);
  for (const ModelSpec& model :
       {ModelSpec::brownian(), ModelSpec::ornstein_uhlenbeck(1.0)}) {
    const auto sample = sample_paths(model, n, grid, 310, 0);
    std::vector<double> pit(n);
    for (std::size_t j = 0; j < n; ++j) {
      pit[j] = model.marginal_cdf(1.0, sample.at(j, 1));
    }
    CHECK(ks_statistic(pit) <= 1.63 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("ou increments honor the stationary correlation") {
  const ModelSpec ou = ModelSpec::ornstein_uhlenbeck(1.0);
  const TimeGrid grid({0.5, 1.1}, 2.0);
  const std::size_t n = 40000;
  const auto sample = sample_paths(ou, n, grid, 55, 0);
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = sample.at(j, 0), y = sample.at(j, 1);
    sx += x; sy += y; sxy += x * y; sxx += x * x; syy += y * y;
  }
  const double nd = static_cast<double>(n);
  const double corr = (sxy / nd - sx * sy / (nd * nd)) /
                      std::sqrt((sxx / nd - sx * sx / (nd * nd)) *
                                (syy / nd - sy * sy / (nd * nd)));
  CHECK(corr == doctest::Approx(std::exp(-0.6)).epsilon(0.02));
}

TEST_CASE("model validation errors") {
  CHECK_THROWS_AS(ModelSpec::ornstein_uhlenbeck(-1.0), ConfigError);
  CHECK_THROWS_AS(TimeGrid({0.0, 0.5}, 1.0), ConfigError);
  CHECK_THROWS_AS(TimeGrid({0.5}, 1.0), ConfigError);
  CHECK_THROWS_AS(TimeGrid({0.5, 0.4}, 1.0), ConfigError);
  CHECK_THROWS_AS(TimeGrid({0.5, 1.5}, 1.0), ConfigError);
  CHECK_THROWS_AS(ModelSpec::brownian().marginal_cdf(0.0, 1.0), ConfigError);
  CHECK(!ModelSpec::independent().is_path_model());
}
