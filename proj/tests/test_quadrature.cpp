#include <doctest.h>

#include <cmath>

#include "emproc/errors.hpp"
#include "emproc/quadrature.hpp"

using namespace emproc;

TEST_CASE("adaptive quadrature: polynomials, oscillation, kinks") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::sin(20.0 * x); }, 0.0, 1.0, 1e-11) ==
        doctest::Approx((1.0 - std::cos(20.0)) / 20.0).epsilon(1e-9));
  // |x - 0.3| has a kink; breakpoint declared.
  const double kinked = integrate([](double x) { return std::fabs(x - 0.3); },
                                  0.0, 1.0, 1e-12, std::vector<double>{0.3});
  CHECK(kinked == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-12));
  // Integrable endpoint singularity.
  CHECK(integrate([](double x) { return 1.0 / std::sqrt(x); }, 1e-12, 1.0, 1e-8) ==
        doctest::Approx(2.0 - 2e-6).epsilon(1e-6));
}

TEST_CASE("quadrature tolerance honesty") {
  auto f = [](double x) { return std::exp(-x) * std::cos(5.0 * x); };
  const double coarse = integrate(f, 0.0, 2.0, 1e-8);
  const double fine = integrate(f, 0.0, 2.0, 5e-9);
  CHECK(std::fabs(coarse - fine) <= 1e-8);
}

TEST_CASE("cumulative integral prefix/suffix") {
  CumulativeIntegral cum([](double x) { return 3.0 * x * x; }, 0.0, 1.0, 1e-12);
  CHECK(cum.total() == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : {0.1, 0.25, 0.5, 0.77, 0.9999}) {
    CHECK(cum.prefix(x) == doctest::Approx(x * x * x).epsilon(1e-11));
    CHECK(cum.suffix(x) == doctest::Approx(1.0 - x * x * x).epsilon(1e-11));
  }
  CHECK(cum.prefix(-1.0) == 0.0);
  CHECK(cum.prefix(2.0) == doctest::Approx(cum.total()));
}

TEST_CASE("cumulative integral with a declared jump") {
  // Indicator-weighted integrand: f vanishes above the threshold.
  const double z = 0.6180339887;
  auto f = [z](double x) { return x <= z ? std::cos(x) : 0.0; };
  CumulativeIntegral cum(f, 0.0, 1.0, 1e-12, std::vector<double>{z});
  CHECK(cum.total() == doctest::Approx(std::sin(z)).epsilon(1e-11));
  CHECK(cum.prefix(0.3) == doctest::Approx(std::sin(0.3)).epsilon(1e-11));
  CHECK(cum.suffix(0.3) == doctest::Approx(std::sin(z) - std::sin(0.3)).epsilon(1e-11));
  CHECK(cum.suffix(0.9) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("iterated unit-square quadrature") {
  const double v = integrate_unit_square(
      [](double w, double z) { return w * z * z; }, 1e-10);
  CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  const double w = integrate_unit_square(
      [](double a, double b) { return std::exp(a + b); }, 1e-10);
  const double e1 = std::exp(1.0) - 1.0;
  CHECK(w == doctest::Approx(e1 * e1).epsilon(1e-9));
}

TEST_CASE("non-finite integrand raises a numerical error") {
  CHECK_THROWS_AS(
      integrate([](double x) { return 1.0 / (x - 0.5); }, 0.0, 1.0, 1e-10),
      NumericalError);
}
