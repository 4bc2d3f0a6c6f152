#include "emproc/weights.hpp"

#include <cmath>
#include <sstream>

#include "emproc/special.hpp"

namespace emproc {

double ScoreSpec::eval(double u) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Power: return scale * std::pow(u, exponent);
  }
  return 0.0;
}

double ScoreSpec::deriv(double u) const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Power:
      if (exponent == 1.0) return scale;
      return scale * exponent * std::pow(u, exponent - 1.0);
  }
  return 0.0;
}

std::string ScoreSpec::name() const {
  std::ostringstream os;
  if (kind == Kind::Constant) {
    os << "c=" << value;
  } else {
    os << "c=" << scale << "*u^" << exponent;
  }
  return os.str();
}

void ScoreSpec::check_derivative() const {
  if (kind == Kind::Power && !(exponent >= 1.0)) {
    throw ConfigError("score: power exponent must be >= 1");
  }
  const double h = 3e-5;
  for (int i = 1; i <= 11; ++i) {
    const double u = static_cast<double>(i) / 12.0;
    const double fd = (eval(u + h) - eval(u - h)) / (2.0 * h);
    const double d = deriv(u);
    const double err = std::fabs(fd - d) / std::max(1.0, std::fabs(d));
    if (err > 1e-6) {
      std::ostringstream os;
      os << "score: declared derivative disagrees with finite differences at u="
         << u << " (" << name() << ", rel err " << err << ")";
      throw ConfigError(os.str());
    }
  }
}

double BaseWeightSpec::eval(double y) const {
  return kind == Kind::Constant ? value : y;
}

std::string BaseWeightSpec::name() const {
  std::ostringstream os;
  if (kind == Kind::Constant) {
    os << "q0=" << value;
  } else {
    os << "q0=identity(|y|<=" << bound << ")";
  }
  return os.str();
}

std::string ThresholdSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::None: os << "Z=+inf"; break;
    case Kind::MinusInfinity: os << "Z=-inf"; break;
    case Kind::Constant: os << "Z=" << a; break;
    case Kind::Affine: os << "Z=" << a << "+" << b << "*t"; break;
  }
  return os.str();
}

double TimeWeightSpec::eval(double t, double y) const {
  switch (kind) {
    case Kind::Constant: return a;
    case Kind::LinearY: return a + b * y;
    case Kind::PhiSin: return a + b * std::sin(t) * normal_cdf(y);
  }
  return 0.0;
}

double TimeWeightSpec::declared_bound() const {
  switch (kind) {
    case Kind::Constant: return std::fabs(a);
    case Kind::LinearY: return std::fabs(a) + std::fabs(b);  // support in [0,1]
    case Kind::PhiSin: return std::fabs(a) + std::fabs(b);
  }
  return 0.0;
}

std::string TimeWeightSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant: os << "q=" << a; break;
    case Kind::LinearY: os << "q=" << a << "+" << b << "*y"; break;
    case Kind::PhiSin: os << "q=" << a << "+" << b << "*sin(t)*Phi(y)"; break;
  }
  return os.str();
}

double WeightSpec::weight_eval(double t, double y) const {
  const double v = q.eval(t, y);
  const double bound = q.declared_bound();
  if (std::fabs(v) > bound + 1e-12) {
    std::ostringstream os;
    os << "weight bound violated: |q(" << t << ", " << y << ")| = "
       << std::fabs(v) << " > " << bound;
    throw InvariantViolation(os.str());
  }
  return v;
}

void WeightSpec::validate() const {
  if (lstat) {
    lstat->c.check_derivative();
    if (lstat->q0.kind == BaseWeightSpec::Kind::Identity &&
        !(lstat->q0.bound > 0.0)) {
      throw ConfigError("weights: identity base weight needs a positive bound");
    }
  }
}

double score_transform(const LStatSpec& ls, double t, double y, double cdf_value) {
  if (y > ls.z.eval(t)) return 0.0;
  return ls.c.eval(cdf_value) * ls.q0.eval(y);
}

double expansion_weight(const LStatSpec& ls, double t, double y, double cdf_value) {
  if (y > ls.z.eval(t)) return 0.0;
  return ls.c.deriv(cdf_value) * ls.q0.eval(y);
}

}  // namespace emproc
