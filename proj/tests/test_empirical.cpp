#include <doctest.h>

#include <cmath>
#include <vector>

#include "emproc/empirical.hpp"
#include "emproc/errors.hpp"
#include "emproc/special.hpp"

using namespace emproc;

namespace {

PathSample two_point_sample(std::vector<double> column) {
  // Same column replicated at both grid points (comonotone layout).
  const TimeGrid grid({0.2, 0.8}, 1.0);
  PathSample s{ModelSpec::comonotone(), grid, column.size(), {}};
  s.values.resize(column.size() * 2);
  for (std::size_t j = 0; j < column.size(); ++j) {
    s.values[j * 2 + 0] = column[j];
    s.values[j * 2 + 1] = column[j];
  }
  return s;
}

WeightSpec lstat_weights(ScoreSpec c, BaseWeightSpec q0, ThresholdSpec z) {
  WeightSpec w = WeightSpec::constant(1.0);
  w.lstat = LStatSpec{c, q0, z};
  return w;
}

ScoreSpec power_score(double exponent, double scale = 1.0) {
  ScoreSpec c;
  c.kind = ScoreSpec::Kind::Power;
  c.exponent = exponent;
  c.scale = scale;
  return c;
}

ScoreSpec const_score(double value) {
  ScoreSpec c;
  c.value = value;
  return c;
}

}  // namespace

TEST_CASE("ecdf evaluation") {
  const std::vector<double> col{1.0, 2.0, 3.0};
  CHECK(ecdf_eval(col, 2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(ecdf_eval(col, 0.5) == 0.0);
  CHECK(ecdf_eval(col, 3.0) == 1.0);
  CHECK(ecdf_eval(col, 9.0) == 1.0);
  const std::vector<double> two{0.2, 0.6};
  CHECK(ecdf_eval(two, 0.2) == doctest::Approx(0.5));  // self-count under <=
  // Monotone, right-continuous step range {0,...,n}/n.
  double prev = -1.0;
  for (double x = -0.5; x <= 3.6; x += 0.01) {
    const double v = ecdf_eval(col, x);
    CHECK(v >= prev);
    CHECK(std::fabs(v * 3.0 - std::round(v * 3.0)) < 1e-12);
    prev = v;
  }
}

TEST_CASE("residual process: hand-computed two-point column") {
  const auto sample = two_point_sample({0.2, 0.6});
  const auto eval = residual_process(sample, WeightSpec::constant(1.0));
  CHECK(eval.beta_star[0] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(eval.beta[0] == doctest::Approx(0.7 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(eval.beta_star[1] == doctest::Approx(0.7).epsilon(1e-14));

  const auto zero = residual_process(sample, WeightSpec::constant(0.0));
  CHECK(zero.beta_star[0] == 0.0);
  CHECK(zero.beta[1] == 0.0);
}

TEST_CASE("rank-sum identity across random tie-free columns") {
  for (std::uint64_t stream = 0; stream < 40; ++stream) {
    const std::size_t n = 2 + stream * 5;
    const auto sample = sample_paths(ModelSpec::comonotone(), n,
                                     TimeGrid({0.2, 0.8}, 1.0), 17, stream);
    const auto direct = simple_residual_process(sample);
    const auto closed = simple_residual_closed_form(sample);
    for (std::size_t i = 0; i < direct.size(); ++i) {
      CHECK(std::fabs(direct[i] - closed[i]) <= 1e-12);
    }
  }
}

TEST_CASE("residual process is linear in the weight") {
  const auto sample = sample_paths(ModelSpec::comonotone(), 64,
                                   TimeGrid({0.2, 0.8}, 1.0), 5, 9);
  WeightSpec lin_full, lin_slope;
  lin_full.q = TimeWeightSpec{TimeWeightSpec::Kind::LinearY, 0.3, 0.4};
  lin_slope.q = TimeWeightSpec{TimeWeightSpec::Kind::LinearY, 0.0, 1.0};
  const auto full = residual_process(sample, lin_full);
  const auto unit = residual_process(sample, WeightSpec::constant(1.0));
  const auto slope = residual_process(sample, lin_slope);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(full.beta_star[i] ==
          doctest::Approx(0.3 * unit.beta_star[i] + 0.4 * slope.beta_star[i])
              .epsilon(1e-12).scale(1.0));
  }
  const auto doubled = residual_process(sample, WeightSpec::constant(2.0));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(doubled.beta[i] == doctest::Approx(2.0 * unit.beta[i]).epsilon(1e-13));
  }
}

TEST_CASE("residual process is invariant under increasing transforms") {
  // Uniform sample pushed through the normal quantile: ranks and PIT values
  // are unchanged, so beta with the matching transformed weight only picks
  // up the sin(t) factor of the catalogue family.
  const TimeGrid grid({0.4, 1.3}, 2.0);
  const auto uniform_sample = sample_paths(ModelSpec::comonotone(), 50, grid, 23, 2);
  PathSample normal_sample{ModelSpec::ornstein_uhlenbeck(1.0), grid, 50, {}};
  normal_sample.values.resize(uniform_sample.values.size());
  for (std::size_t k = 0; k < uniform_sample.values.size(); ++k) {
    normal_sample.values[k] = normal_quantile(uniform_sample.values[k]);
  }
  WeightSpec phi;
  phi.q = TimeWeightSpec{TimeWeightSpec::Kind::PhiSin, 0.0, 1.0};
  WeightSpec ident;
  ident.q = TimeWeightSpec{TimeWeightSpec::Kind::LinearY, 0.0, 1.0};
  const auto transformed = residual_process(normal_sample, phi);
  const auto base = residual_process(uniform_sample, ident);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(transformed.beta_star[i] ==
          doctest::Approx(std::sin(grid[i]) * base.beta_star[i]).epsilon(1e-12));
  }
}

TEST_CASE("ties abort with a data error naming the column") {
  auto sample = two_point_sample({0.4, 0.4, 0.7});
  CHECK_THROWS_AS(residual_process(sample, WeightSpec::constant(1.0)), DataError);
}

TEST_CASE("score process: centered constant and single-term arithmetic") {
  // Constant score transform: c = 0.9, q0 = 1, no threshold; eta = 0.9
  // centers it to zero exactly.
  const auto sample = two_point_sample({0.2, 0.6});
  const auto w = lstat_weights(const_score(0.9), BaseWeightSpec{}, ThresholdSpec{});
  const std::vector<double> eta_exact{0.9, 0.9};
  const auto alpha = score_process(sample, w, eta_exact);
  CHECK(alpha[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(alpha[1] == doctest::Approx(0.0).scale(1.0));

  // One observation, g value 0.9, eta 0.5 -> 0.4.
  PathSample single{ModelSpec::comonotone(), TimeGrid({0.2, 0.8}, 1.0), 1, {0.3, 0.3}};
  const std::vector<double> eta_half{0.5, 0.5};
  const auto one = score_process(single, w, eta_half);
  CHECK(one[0] == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("combined process is the sum of its parts") {
  const auto sample = sample_paths(ModelSpec::comonotone(), 40,
                                   TimeGrid({0.2, 0.8}, 1.0), 77, 0);
  const auto w = lstat_weights(power_score(2.0),
                               BaseWeightSpec{BaseWeightSpec::Kind::Identity, 1.0, 1.0},
                               ThresholdSpec{});
  const std::vector<double> eta{0.25, 0.25};
  EvalOptions opt;
  opt.want_alpha = true;
  opt.want_gamma = true;
  opt.eta = eta;
  opt.rank_sum_guard = false;
  const auto full = evaluate_replication(sample, w, opt);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK((*full.eval.gamma)[i] ==
          doctest::Approx((*full.eval.alpha)[i] + full.beta_expansion[i])
              .epsilon(1e-14).scale(1.0));
  }

  // Constant score: the expansion weight vanishes and gamma collapses to
  // alpha.
  const auto wc = lstat_weights(const_score(1.0), BaseWeightSpec{}, ThresholdSpec{});
  const std::vector<double> eta_one{1.0, 1.0};
  EvalOptions opt2 = opt;
  opt2.eta = eta_one;
  const auto collapsed = evaluate_replication(sample, wc, opt2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(collapsed.beta_expansion[i] == 0.0);
    CHECK((*collapsed.eval.gamma)[i] == (*collapsed.eval.alpha)[i]);
  }
}

TEST_CASE("l-statistic: order-statistic form hand values") {
  // Unit score and weight, no threshold: the mean of n ones.
  const auto sample = two_point_sample({0.2, 0.6, 0.9});
  const auto unit = lstat_weights(const_score(1.0), BaseWeightSpec{}, ThresholdSpec{});
  const auto one = l_statistic(sample, unit);
  CHECK(one.j_n[0] == doctest::Approx(1.0));
  CHECK(one.q_n[0] == 3);

  // Linear score: (n+1)/(2n).
  const auto lin = lstat_weights(power_score(1.0), BaseWeightSpec{}, ThresholdSpec{});
  const auto jn = l_statistic(sample, lin);
  CHECK(jn.j_n[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-14));

  // Column {1,2,3}, Z = 2.5, c = 1, q0 = identity: Q = 2, J = (1+2)/3.
  const auto big = two_point_sample({1.0, 2.0, 3.0});
  auto thresh = lstat_weights(const_score(1.0),
                              BaseWeightSpec{BaseWeightSpec::Kind::Identity, 1.0, 3.0},
                              ThresholdSpec{ThresholdSpec::Kind::Constant, 2.5, 0.0});
  const auto cut = l_statistic(big, thresh);
  CHECK(cut.q_n[0] == 2);
  CHECK(cut.j_n[0] == doctest::Approx(1.0).epsilon(1e-14));

  // Threshold below every point: empty sum.
  auto below = lstat_weights(const_score(1.0), BaseWeightSpec{},
                             ThresholdSpec{ThresholdSpec::Kind::Constant, 0.5, 0.0});
  const auto empty = l_statistic(big, below);
  CHECK(empty.q_n[0] == 0);
  CHECK(empty.j_n[0] == 0.0);

  // Minus-infinity threshold.
  auto minus = lstat_weights(const_score(1.0), BaseWeightSpec{},
                             ThresholdSpec{ThresholdSpec::Kind::MinusInfinity, 0.0, 0.0});
  CHECK(l_statistic(big, minus).j_n[0] == 0.0);

  // Single observation: c(1/1) * q0(Y_1) when Y_1 is below the threshold.
  PathSample single{ModelSpec::comonotone(), TimeGrid({0.2, 0.8}, 1.0), 1, {0.3, 0.3}};
  const auto js = l_statistic(single, lin);
  CHECK(js.j_n[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("rank form agrees with the order-statistic form exactly") {
  for (std::uint64_t stream = 0; stream < 100; ++stream) {
    const std::size_t n = 3 + (stream % 17);
    const auto sample = sample_paths(ModelSpec::comonotone(), n,
                                     TimeGrid({0.2, 0.8}, 1.0), 3141, stream);
    // Vary the configuration with the stream.
    const double expo = 1.0 + static_cast<double>(stream % 3);
    const double zc = 0.1 + 0.09 * static_cast<double>(stream % 11);
    const auto w = lstat_weights(
        power_score(expo),
        BaseWeightSpec{BaseWeightSpec::Kind::Identity, 1.0, 1.0},
        ThresholdSpec{ThresholdSpec::Kind::Constant, zc, 0.0});
    const auto sorted_form = l_statistic(sample, w);
    const auto rank_form = l_statistic_rank_form(sample, w);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::fabs(sorted_form.j_n[i] - rank_form[i]) <= 1e-12);
    }
  }
}

TEST_CASE("expansion remainder: exact-zero cases") {
  const auto sample = sample_paths(ModelSpec::comonotone(), 200,
                                   TimeGrid({0.2, 0.8}, 1.0), 99, 1);
  // Linear score on the comonotone uniform model: the quadratic term of the
  // expansion vanishes identically.
  const auto lin = lstat_weights(power_score(1.0), BaseWeightSpec{}, ThresholdSpec{});
  for (double r : expansion_remainder(sample, lin)) {
    CHECK(std::fabs(r) <= 1e-12);
  }
  // Constant score: J_n is the plain mean, the expansion is exact.
  const auto constant = lstat_weights(const_score(1.0),
                                      BaseWeightSpec{BaseWeightSpec::Kind::Identity, 1.0, 1.0},
                                      ThresholdSpec{ThresholdSpec::Kind::Constant, 0.5, 0.0});
  for (double r : expansion_remainder(sample, constant)) {
    CHECK(r == 0.0);
  }
}

TEST_CASE("remainder plus its linear parts reconstructs sqrt(n)(J_n - J)") {
  const auto sample = sample_paths(ModelSpec::comonotone(), 150,
                                   TimeGrid({0.2, 0.8}, 1.0), 321, 6);
  const auto w = lstat_weights(power_score(2.0), BaseWeightSpec{}, ThresholdSpec{});
  const double eta = 1.0 / 3.0;  // integral of w^2 over (0,1)
  const std::vector<double> eta_vec{eta, eta};
  EvalOptions opt;
  opt.want_alpha = true;
  opt.want_lstat = true;
  opt.want_remainder = true;
  opt.eta = eta_vec;
  opt.rank_sum_guard = false;
  const auto full = evaluate_replication(sample, w, opt);
  const double sqrt_n = std::sqrt(150.0);
  for (std::size_t i = 0; i < 2; ++i) {
    const double lhs = sqrt_n * ((*full.eval.lstat)[i] - eta);
    const double rhs =
        (*full.eval.alpha)[i] + full.beta_expansion[i] + full.remainder[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("paired residual processes share the sample") {
  const auto sample = sample_paths(ModelSpec::comonotone(), 60,
                                   TimeGrid({0.2, 0.8}, 1.0), 12, 0);
  const auto w1 = WeightSpec::constant(1.0);
  const auto [a, b] = paired_residual_process(sample, w1, w1);
  CHECK(a.beta == b.beta);

  const auto [c, d] = paired_residual_process(sample, w1, WeightSpec::constant(2.0));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(d.beta[i] == doctest::Approx(2.0 * c.beta[i]).epsilon(1e-13));
  }
  const auto [e, f] = paired_residual_process(sample, w1, WeightSpec::constant(0.0));
  CHECK(f.beta == std::vector<double>{0.0, 0.0});
}
