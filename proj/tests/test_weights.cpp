#include <doctest.h>

#include <cmath>
#include <limits>

#include "emproc/errors.hpp"
#include "emproc/weights.hpp"

using namespace emproc;

TEST_CASE("score catalogue evaluation and derivative check") {
  ScoreSpec c;
  c.kind = ScoreSpec::Kind::Power;
  c.exponent = 2.0;
  CHECK(c.eval(0.5) == doctest::Approx(0.25));
  CHECK(c.deriv(0.5) == doctest::Approx(1.0));
  CHECK_NOTHROW(c.check_derivative());

  ScoreSpec lin;
  lin.kind = ScoreSpec::Kind::Power;
  lin.exponent = 1.0;
  lin.scale = 3.0;
  CHECK(lin.eval(0.2) == doctest::Approx(0.6));
  CHECK(lin.deriv(0.9) == doctest::Approx(3.0));
  CHECK_NOTHROW(lin.check_derivative());

  ScoreSpec constant;
  CHECK(constant.deriv(0.3) == 0.0);
  CHECK_NOTHROW(constant.check_derivative());

  ScoreSpec high;
  high.kind = ScoreSpec::Kind::Power;
  high.exponent = 4.0;
  CHECK_NOTHROW(high.check_derivative());

  ScoreSpec bad;
  bad.kind = ScoreSpec::Kind::Power;
  bad.exponent = 0.5;
  CHECK_THROWS_AS(bad.check_derivative(), ConfigError);
}

TEST_CASE("threshold map") {
  ThresholdSpec none;
  CHECK(std::isinf(none.eval(0.3)));
  ThresholdSpec minus{ThresholdSpec::Kind::MinusInfinity};
  CHECK(minus.eval(0.3) == -std::numeric_limits<double>::infinity());
  ThresholdSpec affine{ThresholdSpec::Kind::Affine, 0.5, 0.25};
  CHECK(affine.eval(2.0) == doctest::Approx(1.0));
}

TEST_CASE("direct weight families and the declared bound") {
  WeightSpec unit = WeightSpec::constant(1.0);
  CHECK(unit.weight_eval(0.3, 123.0) == 1.0);

  WeightSpec phi;
  phi.q = TimeWeightSpec{TimeWeightSpec::Kind::PhiSin, 1.0, 0.5};
  CHECK(phi.q.declared_bound() == doctest::Approx(1.5));
  CHECK(phi.weight_eval(1.0, 0.0) == doctest::Approx(1.0 + 0.5 * std::sin(1.0) * 0.5));
  CHECK(std::fabs(phi.weight_eval(1.0, 50.0)) <= 1.5);

  // LinearY is declared for unit-interval supports; evaluating far outside
  // trips the bound check and names the point.
  WeightSpec lin;
  lin.q = TimeWeightSpec{TimeWeightSpec::Kind::LinearY, 0.0, 1.0};
  CHECK(lin.weight_eval(0.2, 0.7) == doctest::Approx(0.7));
  CHECK_THROWS_AS(lin.weight_eval(0.2, 5.0), InvariantViolation);
}

TEST_CASE("score transform and expansion weight honor the threshold") {
  LStatSpec ls;
  ls.c.kind = ScoreSpec::Kind::Power;
  ls.c.exponent = 2.0;
  ls.q0 = BaseWeightSpec{BaseWeightSpec::Kind::Identity, 1.0, 1.0};
  ls.z = ThresholdSpec{ThresholdSpec::Kind::Constant, 0.5, 0.0};
  // Below the threshold: c(w) * q0(y) and c'(w) * q0(y).
  CHECK(score_transform(ls, 0.1, 0.4, 0.4) == doctest::Approx(0.16 * 0.4));
  CHECK(expansion_weight(ls, 0.1, 0.4, 0.4) == doctest::Approx(0.8 * 0.4));
  // Above: both vanish.
  CHECK(score_transform(ls, 0.1, 0.6, 0.6) == 0.0);
  CHECK(expansion_weight(ls, 0.1, 0.6, 0.6) == 0.0);

  LStatSpec none = ls;
  none.z.kind = ThresholdSpec::Kind::MinusInfinity;
  CHECK(score_transform(none, 0.1, 0.4, 0.4) == 0.0);
}

TEST_CASE("weights without the lstat block refuse score operations") {
  const WeightSpec unit = WeightSpec::constant(1.0);
  CHECK(!unit.eta_defined());
  CHECK_THROWS_AS(unit.score_eval(0.5), ConfigError);
}
