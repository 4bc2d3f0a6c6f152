#include "emproc/stats.hpp"

#include <algorithm>
#include <cmath>

#include "emproc/errors.hpp"
#include "emproc/pairwise.hpp"
#include "emproc/special.hpp"

namespace emproc {

MeanEstimate estimate_mean(std::span<const double> x) {
  if (x.size() < 2) throw DataError("estimate_mean: need at least 2 values");
  const double mean = pairwise_mean(x);
  const double ss = pairwise_sum_of(x, [&](double v) {
    const double d = v - mean;
    return d * d;
  });
  const double var = ss / static_cast<double>(x.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(x.size()))};
}

VarianceEstimate estimate_variance(std::span<const double> x) {
  if (x.size() < 2) throw DataError("estimate_variance: need at least 2 values");
  const double nr = static_cast<double>(x.size());
  const double mean = pairwise_mean(x);
  const double m2 = pairwise_sum_of(x, [&](double v) {
                      const double d = v - mean;
                      return d * d;
                    }) / nr;
  const double m4 = pairwise_sum_of(x, [&](double v) {
                      const double d = v - mean;
                      return d * d * d * d;
                    }) / nr;
  const double var = m2 * nr / (nr - 1.0);
  const double se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / nr);
  return {var, se};
}

CovarianceEstimate estimate_covariance(std::span<const double> x,
                                       std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DataError("estimate_covariance: need two equal series, length >= 2");
  }
  const double nr = static_cast<double>(x.size());
  const double mx = pairwise_mean(x);
  const double my = pairwise_mean(y);
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  const double m11 = pairwise_sum(prod) / nr;
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = prod[i] * prod[i];
  const double m22 = pairwise_sum(prod) / nr;
  const double cov = m11 * nr / (nr - 1.0);
  const double se = std::sqrt(std::max(m22 - m11 * m11, 0.0) / nr);
  return {cov, se};
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double ks_statistic(std::vector<double> transformed) {
  if (transformed.empty()) throw DataError("ks_statistic: empty input");
  std::sort(transformed.begin(), transformed.end());
  const double n = static_cast<double>(transformed.size());
  double d = 0.0;
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const double u = transformed[i];
    const double hi = (static_cast<double>(i) + 1.0) / n - u;
    const double lo = u - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

double ad_statistic(std::vector<double> transformed) {
  if (transformed.empty()) throw DataError("ad_statistic: empty input");
  std::sort(transformed.begin(), transformed.end());
  const std::size_t n = transformed.size();
  const double nd = static_cast<double>(n);
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = std::clamp(transformed[i], 1e-300, 1.0 - 1e-16);
    double v = std::clamp(transformed[n - 1 - i], 1e-300, 1.0 - 1e-16);
    terms[i] = (2.0 * static_cast<double>(i) + 1.0) *
               (std::log(u) + std::log1p(-v));
  }
  return -nd - pairwise_sum(terms) / nd;
}

double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

double ad_p_value(double a2, std::size_t n) {
  return 1.0 - anderson_darling_cdf(n, a2);
}

}  // namespace emproc
