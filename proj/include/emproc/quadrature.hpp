#pragma once

#include <functional>
#include <span>
#include <vector>

namespace emproc {

// Adaptive Gauss-Kronrod (15/7) quadrature on [a,b] with an absolute error
// target. Interior breakpoints force panel boundaries at known kinks (e.g. an
// indicator threshold); the integrand itself only needs to be piecewise
// smooth. Throws NumericalError when the error estimate cannot be brought
// under abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, std::span<const double> breakpoints = {});

// Iterated 2-D quadrature over the unit square. inner_breakpoints(w), when
// provided, reports the kink locations of z -> f(w,z) for the current outer
// abscissa.
double integrate_unit_square(
    const std::function<double(double, double)>& f, double abs_tol,
    const std::function<std::vector<double>(double)>& inner_breakpoints = {});

// Piecewise-Chebyshev representation of x -> integral of f over [a,x].
// Panels are refined until the interpolant tail indicates convergence, so a
// single construction supports many fast prefix/suffix evaluations. This is
// what makes the nested covariance integrals cheap: the inner "mass above a
// threshold" integrals become O(degree) lookups.
class CumulativeIntegral {
 public:
  CumulativeIntegral(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, std::span<const double> breakpoints = {});

  // Integral of f over [a, clamp(x)]. Monotone in x when f >= 0.
  double prefix(double x) const;
  // Integral of f over [clamp(x), b].
  double suffix(double x) const { return total_ - prefix(x); }
  double total() const { return total_; }

 private:
  struct Panel {
    double lo;
    double hi;
    double start;                // cumulative integral over [a, lo]
    std::vector<double> anti;    // Chebyshev coeffs of the local antiderivative
  };
  std::vector<Panel> panels_;
  double a_;
  double b_;
  double total_ = 0.0;
};

}  // namespace emproc
