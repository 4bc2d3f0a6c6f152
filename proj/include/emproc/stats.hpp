#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emproc {

// Moment estimates with asymptotic standard errors, all reduced by pairwise
// summation over the replication index.
struct MeanEstimate {
  double mean;
  double se;
};
struct VarianceEstimate {
  double variance;
  double se;  // sqrt((m4 - m2^2)/R)
};
struct CovarianceEstimate {
  double covariance;
  double se;  // sqrt((m22 - cov^2)/R)
};

MeanEstimate estimate_mean(std::span<const double> x);
VarianceEstimate estimate_variance(std::span<const double> x);
CovarianceEstimate estimate_covariance(std::span<const double> x,
                                       std::span<const double> y);

// Median through a full deterministic sort (stable across worker counts).
double median(std::vector<double> values);

// One-sample Kolmogorov-Smirnov distance of `values` against a fully
// specified continuous CDF given as the already-transformed probabilities
// u_i = F(x_i). Input need not be sorted.
double ks_statistic(std::vector<double> transformed);

// Anderson-Darling statistic from the transformed probabilities.
double ad_statistic(std::vector<double> transformed);

// Asymptotic p-values. KS uses the Stephens small-sample scaling before the
// Kolmogorov tail; AD uses the Marsaglia & Marsaglia evaluation.
double ks_p_value(double d, std::size_t n);
double ad_p_value(double a2, std::size_t n);

}  // namespace emproc
