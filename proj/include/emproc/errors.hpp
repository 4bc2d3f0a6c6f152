#pragma once

#include <stdexcept>
#include <string>

namespace emproc {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError      -> exit 2 (bad configuration, never produces partial output)
//   DataError        -> exit 3 (tied sample values; continuous-margin assumption broken)
//   NumericalError   -> exit 3 (quadrature non-convergence and friends)
//   InvariantViolation -> exit 3 (declared bound or exact identity broken at runtime)

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved_tol)
      : std::runtime_error(what), achieved_tolerance(achieved_tol) {}
  double achieved_tolerance;
};

class InvariantViolation : public std::runtime_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace emproc
