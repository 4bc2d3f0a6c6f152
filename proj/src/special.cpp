#include "emproc/special.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emproc {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt2Pi = 2.50662827463100050242;
}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  // AS 241, algorithm PPND16 (Wichura 1988).
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0,1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                   6.7265770927008700853e4) *
                      r +
                  4.5921953931549871457e4) *
                     r +
                 1.3731693765509461125e4) *
                    r +
                1.9715909503065514427e3) *
                   r +
               1.3314166789178437745e2) *
                  r +
              3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) *
                 r +
             2.1213794301586595867e4) *
                r +
            5.3941960214247511077e3) *
               r +
           6.8718700749205790830e2) *
              r +
          4.2313330701600911252e1) *
             r +
         1.0);
    return num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
    z = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-6) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
    z = num / den;
  }
  return (q < 0.0) ? -z : z;
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1], split by required accuracy as in
// Genz's bivariate normal routine.
constexpr double kGlX6[3] = {0.9324695142031521, 0.6612093864662645,
                             0.2386191860831969};
constexpr double kGlW6[3] = {0.1713244923791704, 0.3607615730481386,
                             0.4679139345726910};
constexpr double kGlX12[6] = {0.9815606342467192, 0.9041172563704749,
                              0.7699026741943047, 0.5873179542866175,
                              0.3678314989981802, 0.1252334085114689};
constexpr double kGlW12[6] = {0.0471753363865118, 0.1069393259953184,
                              0.1600783285433462, 0.2031674267230659,
                              0.2334925365383548, 0.2491470458134028};
constexpr double kGlX20[10] = {0.9931285991850949, 0.9639719272779138,
                               0.9122344282513259, 0.8391169718222188,
                               0.7463319064601508, 0.6360536807265150,
                               0.5108670019508271, 0.3737060887154195,
                               0.2277858511416451, 0.0765265211334973};
constexpr double kGlW20[10] = {0.0176140071391521, 0.0406014298003869,
                               0.0626720483341091, 0.0832767415767048,
                               0.1019301198172404, 0.1181945319615184,
                               0.1316886384491766, 0.1420961093183820,
                               0.1491729864726037, 0.1527533871307258};

// Genz (2004): upper-right orthant probability P(X > h, Y > k).
double bvn_upper(double h, double k, double r) {
  const double* x;
  const double* w;
  int lg;
  const double ar = std::fabs(r);
  if (ar < 0.3) {
    x = kGlX6;
    w = kGlW6;
    lg = 3;
  } else if (ar < 0.75) {
    x = kGlX12;
    w = kGlW12;
    lg = 6;
  } else {
    x = kGlX20;
    w = kGlW20;
    lg = 10;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (ar < 0.925) {
    if (ar > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
          bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn = bvn * asr / (4.0 * kPi);
    }
    bvn += normal_cdf(-h) * normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0) {
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
               c * d * as * as / 5.0);
      }
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * kSqrt2Pi * normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double xi = a * (is * x[i] + 1.0);
          const double xs = xi * xi;
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            bvn += a * w[i] * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
          }
        }
      }
      bvn = -bvn / (2.0 * kPi);
    }
    if (r > 0.0) {
      bvn += normal_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += normal_cdf(k) - normal_cdf(h);
    }
  }
  return bvn;
}

}  // namespace

double bivariate_normal_cdf(double x, double y, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::domain_error("bivariate_normal_cdf: |rho| must be <= 1");
  }
  if (std::isinf(x) || std::isinf(y)) {
    if (x < 0.0 || y < 0.0) return 0.0;
    if (std::isinf(x) && std::isinf(y)) return 1.0;
    return std::isinf(x) ? normal_cdf(y) : normal_cdf(x);
  }
  if (rho >= 1.0) return normal_cdf(std::min(x, y));
  if (rho <= -1.0) return std::max(normal_cdf(x) + normal_cdf(y) - 1.0, 0.0);
  const double p = bvn_upper(-x, -y, rho);
  return std::clamp(p, 0.0, 1.0);
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 10.0) return 0.0;
  if (x < 1.0) {
    // Jacobi-theta form of the CDF, accurate for small arguments:
    // K(x) = sqrt(2*pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2)).
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * kPi * kPi / (8.0 * x * x));
      s += term;
      if (term < 1e-18 * (s + 1e-300)) break;
    }
    return std::clamp(1.0 - kSqrt2Pi / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * x * x);
    s += term;
    if (std::fabs(term) < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double anderson_darling_cdf(std::size_t n, double a2) {
  // Marsaglia & Marsaglia (2004): adinf plus the errfix finite-n correction.
  auto adinf = [](double z) -> double {
    if (z < 0.01) return 0.0;
    if (z < 2.0) {
      return std::exp(-1.2337141 / z) / std::sqrt(z) *
             (2.00012 +
              (0.247105 -
               (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) *
                   z) *
                  z);
    }
    return std::exp(
        -std::exp(1.0776 - (2.30695 -
                            (0.43424 - (0.082433 -
                                        (0.008056 - 0.0003146 * z) * z) *
                                           z) *
                                z) *
                               z));
  };
  auto errfix = [](double nn, double x) -> double {
    if (x > 0.8) {
      return (-130.2137 +
              (745.2337 -
               (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) *
                   x) *
                  x) /
             nn;
    }
    const double c = 0.01265 + 0.1757 / nn;
    if (x < c) {
      double t = x / c;
      t = std::sqrt(t) * (1.0 - t) * (49.0 * t - 102.0);
      return t * (0.0037 / (nn * nn) + 0.00078 / nn + 0.00006) / nn;
    }
    double t = (x - c) / (0.8 - c);
    t = -0.00022633 +
        (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) *
            t;
    return t * (0.04213 + 0.01365 / nn) / nn;
  };
  if (a2 <= 0.0) return 0.0;
  const double x = adinf(a2);
  const double v = x + errfix(static_cast<double>(n), x);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace emproc
