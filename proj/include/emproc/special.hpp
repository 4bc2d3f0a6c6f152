#pragma once

#include <cstddef>

namespace emproc {

// Standard normal density, CDF, and inverse CDF.
double normal_pdf(double x);
double normal_cdf(double x);

// Wichura's AS 241 PPND16 rational approximation; relative error ~1e-16 on
// (0,1). Throws std::domain_error outside (0,1).
double normal_quantile(double p);

// Bivariate standard normal CDF P(X <= x, Y <= y) with correlation rho,
// |rho| <= 1. Genz (2004) Gauss-Legendre scheme; absolute error well below
// 1e-14, comfortably inside the 1e-10 budget the oracle integrals assume.
double bivariate_normal_cdf(double x, double y, double rho);

// Survival function of the Kolmogorov distribution: P(sup|B(t)| > x) for a
// Brownian bridge B. Used for asymptotic KS p-values.
double kolmogorov_sf(double x);

// Asymptotic CDF of the Anderson-Darling statistic for a fully specified
// continuous null, with Marsaglia & Marsaglia's finite-n correction.
double anderson_darling_cdf(std::size_t n, double a2);

}  // namespace emproc
