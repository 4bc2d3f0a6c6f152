#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emproc/errors.hpp"

namespace emproc {

// Strictly increasing evaluation times in (0, T]. Zero is excluded so models
// whose marginal law degenerates at the origin are always valid on a grid.
class TimeGrid {
 public:
  TimeGrid(std::vector<double> points, double horizon)
      : points_(std::move(points)), horizon_(horizon) {
    if (!(horizon_ > 0.0)) throw ConfigError("time grid: horizon must be positive");
    if (points_.size() < 2) throw ConfigError("time grid: need at least 2 points");
    double prev = 0.0;
    for (double t : points_) {
      if (!(t > prev)) {
        throw ConfigError("time grid: points must be strictly increasing and positive");
      }
      prev = t;
    }
    if (points_.back() > horizon_) {
      throw ConfigError("time grid: points must lie in (0, horizon]");
    }
  }

  static TimeGrid linspace(std::size_t count, double lo, double hi, double horizon) {
    if (count < 2) throw ConfigError("time grid: need at least 2 points");
    std::vector<double> pts(count);
    for (std::size_t i = 0; i < count; ++i) {
      pts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return TimeGrid(std::move(pts), horizon);
  }

  std::span<const double> points() const { return points_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> points_;
  double horizon_;
};

}  // namespace emproc
