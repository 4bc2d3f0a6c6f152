#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "emproc/special.hpp"

using namespace emproc;

TEST_CASE("normal cdf and quantile agree with reference values") {
  // Reference: scipy.stats.norm (frozen).
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(normal_quantile(1e-9) == doctest::Approx(-5.99780701500769).epsilon(1e-12));
  CHECK(normal_quantile(0.3) == doctest::Approx(-0.524400512708041).epsilon(1e-12));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-3.0) == doctest::Approx(0.00134989803163009).epsilon(1e-12));
  CHECK(normal_cdf(0.5) == doctest::Approx(0.691462461274013).epsilon(1e-12));
}

TEST_CASE("normal quantile round-trips through the cdf") {
  for (int i = 1; i <= 101; ++i) {
    const double p = static_cast<double>(i) / 102.0;
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(-0.5), std::domain_error);
}

TEST_CASE("bivariate normal cdf matches closed forms and references") {
  // Orthant identity: Phi2(0,0,rho) = 1/4 + asin(rho)/(2 pi).
  for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.5, 0.925, 0.99}) {
    const double expected = 0.25 + std::asin(rho) / (2.0 * 3.14159265358979323846);
    CHECK(bivariate_normal_cdf(0.0, 0.0, rho) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Frozen scipy.multivariate_normal values.
  CHECK(bivariate_normal_cdf(1.0, -0.5, 0.3) == doctest::Approx(0.28313842024448).epsilon(1e-10));
  CHECK(bivariate_normal_cdf(0.5, 0.5, 0.95) == doctest::Approx(0.64690719536679).epsilon(1e-10));
  CHECK(bivariate_normal_cdf(2.0, 1.0, -0.9) == doctest::Approx(0.81859461412059).epsilon(1e-10));
  CHECK(bivariate_normal_cdf(-1.0, -1.0, 0.7) == doctest::Approx(0.083979381625648).epsilon(1e-10));
  CHECK(bivariate_normal_cdf(0.3, 0.7, 0.99) == doctest::Approx(0.6178769340597).epsilon(1e-10));
}

TEST_CASE("bivariate normal cdf marginal consistency and monotone rectangles") {
  for (double rho : {-0.8, -0.2, 0.4, 0.95}) {
    for (double x : {-1.5, -0.2, 0.8, 2.5}) {
      CHECK(bivariate_normal_cdf(x, 40.0, rho) == doctest::Approx(normal_cdf(x)).epsilon(1e-10));
      CHECK(bivariate_normal_cdf(40.0, x, rho) == doctest::Approx(normal_cdf(x)).epsilon(1e-10));
    }
    // 2-increasing: P(a < X <= b, c < Y <= d) >= 0.
    const double pts[] = {-2.0, -0.5, 0.5, 2.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double mass = bivariate_normal_cdf(pts[i + 1], pts[j + 1], rho) -
                            bivariate_normal_cdf(pts[i], pts[j + 1], rho) -
                            bivariate_normal_cdf(pts[i + 1], pts[j], rho) +
                            bivariate_normal_cdf(pts[i], pts[j], rho);
        CHECK(mass >= -1e-12);
      }
    }
  }
  CHECK(bivariate_normal_cdf(0.3, 0.9, 1.0) == doctest::Approx(normal_cdf(0.3)));
  CHECK(bivariate_normal_cdf(0.3, -0.3, -1.0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("kolmogorov survival function") {
  // Frozen scipy.special.kolmogorov values.
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.963945243664875).epsilon(1e-10));
  CHECK(kolmogorov_sf(0.8284) == doctest::Approx(0.498701181237859).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.269999671677355).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.3581) == doctest::Approx(0.0499996304316674).epsilon(1e-10));
  CHECK(kolmogorov_sf(2.0) == doctest::Approx(0.000670925255779695).epsilon(1e-10));
  CHECK(kolmogorov_sf(0.0) == doctest::Approx(1.0));
}

TEST_CASE("anderson-darling asymptotic cdf hits the classical critical points") {
  // Upper-tail critical values for the fully specified case.
  CHECK(anderson_darling_cdf(100000, 2.492) == doctest::Approx(0.95).epsilon(2e-3));
  CHECK(anderson_darling_cdf(100000, 3.878) == doctest::Approx(0.99).epsilon(2e-3));
  CHECK(anderson_darling_cdf(100000, 1.933) == doctest::Approx(0.90).epsilon(2e-3));
  CHECK(anderson_darling_cdf(100000, 1.248) == doctest::Approx(0.75).epsilon(3e-3));
}
