#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emproc {

// Pairwise (cascade) summation. The split points depend only on the number of
// terms, so the result is a pure function of the input sequence; reductions of
// per-replication arrays give identical bits no matter how many workers filled
// the array.
inline double pairwise_sum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

inline double pairwise_mean(std::span<const double> x) {
  return x.empty() ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

// Sum of f(x[i]) evaluated into a scratch buffer first, so the reduction stays
// pairwise. Convenience for centered-moment computations.
template <typename F>
double pairwise_sum_of(std::span<const double> x, F&& f) {
  std::vector<double> tmp(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = f(x[i]);
  return pairwise_sum(tmp);
}

}  // namespace emproc
