#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "emproc/errors.hpp"

namespace emproc {

struct ModelSpec;

// Score function c on [0,1], with its exact derivative. The catalogue is
// closed (no runtime code loading); parameters come from the experiment
// configuration.
struct ScoreSpec {
  enum class Kind { Constant, Power };
  Kind kind = Kind::Constant;
  double value = 1.0;   // Constant
  double exponent = 1.0;  // Power: c(u) = scale * u^exponent, exponent >= 1
  double scale = 1.0;

  double eval(double u) const;
  double deriv(double u) const;
  bool deriv_is_zero() const { return kind == Kind::Constant || scale == 0.0; }
  std::string name() const;
  // Central finite differences at interior points of [0,1] confirm the
  // declared derivative; a mismatch is a configuration error.
  void check_derivative() const;
  bool operator==(const ScoreSpec&) const = default;
};

// Base weight on the observation scale. `bound` is the declared sup-norm on
// the region the weight is actually evaluated on; runtime evaluation checks
// it.
struct BaseWeightSpec {
  enum class Kind { Constant, Identity };
  Kind kind = Kind::Constant;
  double value = 1.0;  // Constant
  double bound = 1.0;  // Identity: declared sup of |y| on the support

  double eval(double y) const;
  double declared_bound() const { return kind == Kind::Constant ? std::fabs(value) : bound; }
  std::string name() const;
  bool operator==(const BaseWeightSpec&) const = default;
};

// Threshold map t -> Z(t), extended-real valued.
struct ThresholdSpec {
  enum class Kind { None, MinusInfinity, Constant, Affine };
  Kind kind = Kind::None;
  double a = 0.0;
  double b = 0.0;

  double eval(double t) const {
    switch (kind) {
      case Kind::None: return std::numeric_limits<double>::infinity();
      case Kind::MinusInfinity: return -std::numeric_limits<double>::infinity();
      case Kind::Constant: return a;
      case Kind::Affine: return a + b * t;
    }
    return std::numeric_limits<double>::infinity();
  }
  std::string name() const;
  bool operator==(const ThresholdSpec&) const = default;
};

// Bounded weight family q(t, y) driving the residual process directly.
struct TimeWeightSpec {
  enum class Kind { Constant, LinearY, PhiSin };
  Kind kind = Kind::Constant;
  double a = 1.0;
  double b = 0.0;

  // Constant: a.  LinearY: a + b*y (bounded on [0,1] supports).
  // PhiSin: a + b*sin(t)*Phi(y), bounded everywhere.
  double eval(double t, double y) const;
  double declared_bound() const;
  std::string name() const;
  bool operator==(const TimeWeightSpec&) const = default;
};

// The ingredients of the time-dependent L-statistic: rank score c, base
// weight q0 and threshold Z(t). Together with a marginal CDF they induce
//   score transform   g_t(y) = c(G_t(y)) q0(y) 1(y <= Z(t))
//   expansion weight  q_t(y) = c'(G_t(y)) q0(y) 1(y <= Z(t))
struct LStatSpec {
  ScoreSpec c;
  BaseWeightSpec q0;
  ThresholdSpec z;
  bool operator==(const LStatSpec&) const = default;
};

struct WeightSpec {
  TimeWeightSpec q;                // direct process weight
  std::optional<LStatSpec> lstat;  // present iff the score side is configured

  bool eta_defined() const { return lstat.has_value(); }
  const LStatSpec& lstat_or_throw() const {
    if (!lstat) throw ConfigError("weights: operation needs the lstat block (c, q0, z)");
    return *lstat;
  }

  // Direct weight with the declared-bound runtime check; a violation names
  // the offending point.
  double weight_eval(double t, double y) const;
  double score_eval(double u) const { return lstat_or_throw().c.eval(u); }

  // Validates parameter ranges and the c / c' consistency.
  void validate() const;

  bool operator==(const WeightSpec&) const = default;

  static WeightSpec constant(double value) {
    WeightSpec w;
    w.q = TimeWeightSpec{TimeWeightSpec::Kind::Constant, value, 0.0};
    return w;
  }
};

// Evaluations of the induced transforms; `cdf_value` is w = G_t(y), carried
// alongside y because every consumer has it already.
double score_transform(const LStatSpec& ls, double t, double y, double cdf_value);
double expansion_weight(const LStatSpec& ls, double t, double y, double cdf_value);

}  // namespace emproc
