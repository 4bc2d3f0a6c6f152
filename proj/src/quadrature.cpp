#include "emproc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "emproc/errors.hpp"

namespace emproc {

namespace {

// QUADPACK dqk15 nodes: 15-point Kronrod extension of 7-point Gauss.
constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767,
                           0.3818300505051189, 0.4179591836734694};

struct PanelEstimate {
  double value;
  double error;
};

PanelEstimate gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kron = 0.0;
  double gauss = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * kXgk[i];
    double fsum;
    if (i == 7) {
      fsum = f(c);
    } else {
      fsum = f(c - dx) + f(c + dx);
    }
    if (!std::isfinite(fsum)) {
      throw NumericalError("quadrature: non-finite integrand value", 0.0);
    }
    kron += kWgk[i] * fsum;
    if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
  }
  const double value = kron * h;
  const double diff = std::fabs((kron - gauss) * h);
  // QUADPACK-style sharpened error estimate.
  const double scale = std::fabs(value) + diff;
  double err = diff;
  if (scale > 0.0 && diff > 0.0) {
    err = std::min(diff, diff * std::sqrt(diff / (scale + 1e-300)));
    err = std::max(err, diff * 1e-6);
  }
  return {value, std::max(err, 1e-300)};
}

struct Interval {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Interval& other) const { return error < other.error; }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, std::span<const double> breakpoints) {
  if (a == b) return 0.0;
  if (!(b > a)) throw NumericalError("quadrature: inverted interval", 0.0);

  std::vector<double> edges{a};
  for (double bp : breakpoints) {
    if (bp > a && bp < b) edges.push_back(bp);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<Interval> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const auto est = gk15(f, edges[i], edges[i + 1]);
    heap.push({edges[i], edges[i + 1], est.value, est.error});
    total += est.value;
    total_err += est.error;
  }

  constexpr int kMaxPanels = 4000;
  int panels = static_cast<int>(edges.size()) - 1;
  while (total_err > abs_tol && panels < kMaxPanels) {
    const Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval at floating-point resolution; keep its estimate as final.
      total_err -= worst.error * 0.5;  // avoid livelock on a point singularity
      heap.push({worst.a, worst.b, worst.value, worst.error * 0.5});
      ++panels;
      continue;
    }
    const auto left = gk15(f, worst.a, mid);
    const auto right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push({worst.a, mid, left.value, left.error});
    heap.push({mid, worst.b, right.value, right.error});
    ++panels;
  }
  if (total_err > abs_tol) {
    throw NumericalError("quadrature: failed to reach requested tolerance",
                         total_err);
  }
  return total;
}

double integrate_unit_square(
    const std::function<double(double, double)>& f, double abs_tol,
    const std::function<std::vector<double>(double)>& inner_breakpoints) {
  const double inner_tol = abs_tol / 16.0;
  const double outer_tol = abs_tol * (7.0 / 8.0);
  auto outer = [&](double w) {
    std::vector<double> breaks;
    if (inner_breakpoints) breaks = inner_breakpoints(w);
    return integrate([&](double z) { return f(w, z); }, 0.0, 1.0, inner_tol,
                     breaks);
  };
  return integrate(outer, 0.0, 1.0, outer_tol);
}

namespace {

constexpr int kChebDegree = 24;

// Chebyshev coefficients of the degree-N interpolant at Lobatto points.
std::vector<double> cheb_coeffs(const std::vector<double>& fvals) {
  const int n = static_cast<int>(fvals.size()) - 1;
  std::vector<double> c(n + 1, 0.0);
  const double pi_n = 3.14159265358979323846 / n;
  for (int k = 0; k <= n; ++k) {
    double s = 0.5 * (fvals[0] + (k % 2 == 0 ? fvals[n] : -fvals[n]));
    for (int j = 1; j < n; ++j) {
      s += fvals[j] * std::cos(pi_n * k * j);
    }
    c[k] = 2.0 * s / n;
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return c;
}

double cheb_eval(const std::vector<double>& c, double xi) {
  // Clenshaw recurrence.
  double b1 = 0.0;
  double b2 = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
    const double b0 = 2.0 * xi * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return xi * b1 - b2 + c[0];
}

}  // namespace

CumulativeIntegral::CumulativeIntegral(const std::function<double(double)>& f,
                                       double a, double b, double abs_tol,
                                       std::span<const double> breakpoints)
    : a_(a), b_(b) {
  if (!(b >= a)) throw NumericalError("cumulative integral: inverted interval", 0.0);
  std::vector<double> edges{a};
  for (double bp : breakpoints) {
    if (bp > a && bp < b) edges.push_back(bp);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  struct Pending {
    double lo;
    double hi;
    int depth;
  };
  std::vector<Pending> work;
  for (std::size_t i = edges.size() - 1; i >= 1; --i) {
    work.push_back({edges[i - 1], edges[i], 0});
  }

  const double width = b - a;
  std::vector<Panel> raw;
  while (!work.empty()) {
    const Pending p = work.back();
    work.pop_back();

    // Lobatto samples ordered as cheb_coeffs expects: fv[j] = f at
    // xi = cos(pi j / N), i.e. descending in x.
    std::vector<double> fv(kChebDegree + 1);
    const double mid = 0.5 * (p.lo + p.hi);
    const double half = 0.5 * (p.hi - p.lo);
    for (int j = 0; j <= kChebDegree; ++j) {
      const double xi = std::cos(3.14159265358979323846 * j / kChebDegree);
      const double v = f(mid + half * xi);
      if (!std::isfinite(v)) {
        throw NumericalError("cumulative integral: non-finite integrand", 0.0);
      }
      fv[j] = v;
    }
    auto c = cheb_coeffs(fv);

    // Tail of the Chebyshev series as the interpolation error proxy, scaled
    // by panel width as an integral-error proxy.
    const double tail =
        (std::fabs(c[kChebDegree]) + std::fabs(c[kChebDegree - 1]) +
         std::fabs(c[kChebDegree - 2])) *
        (p.hi - p.lo);
    const double panel_budget =
        abs_tol * std::max((p.hi - p.lo) / width, 1e-3);
    if (tail > panel_budget && p.depth < 40 && mid > p.lo && mid < p.hi) {
      work.push_back({mid, p.hi, p.depth + 1});
      work.push_back({p.lo, mid, p.depth + 1});
      continue;
    }

    // Antiderivative coefficients: d/dxi sum(bk Tk) = sum(ck Tk).
    std::vector<double> anti(kChebDegree + 2, 0.0);
    for (int k = 1; k <= kChebDegree + 1; ++k) {
      const double ckm1 = c[k - 1];
      const double ckp1 = (k + 1 <= kChebDegree) ? c[k + 1] : 0.0;
      anti[k] = (ckm1 - ckp1) / (2.0 * k);
    }
    anti[1] = c[0] - 0.5 * c[2];  // T0 integrates to T1
    // Normalize so the antiderivative vanishes at xi = -1, and fold in the
    // x-to-xi scale.
    double at_minus1 = 0.0;
    double sign = -1.0;
    for (int k = 1; k < static_cast<int>(anti.size()); ++k) {
      at_minus1 += anti[k] * sign;
      sign = -sign;
    }
    anti[0] = -at_minus1;
    for (double& v : anti) v *= half;

    raw.push_back(Panel{p.lo, p.hi, 0.0, std::move(anti)});
  }

  std::sort(raw.begin(), raw.end(),
            [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
  double running = 0.0;
  for (auto& panel : raw) {
    panel.start = running;
    running += cheb_eval(panel.anti, 1.0);
  }
  total_ = running;
  panels_ = std::move(raw);
}

double CumulativeIntegral::prefix(double x) const {
  if (x <= a_ || panels_.empty()) return 0.0;
  if (x >= b_) return total_;
  // Find the panel containing x.
  std::size_t lo = 0;
  std::size_t hi = panels_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (panels_[mid].lo <= x) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  const Panel& p = panels_[lo];
  const double xi =
      std::clamp((2.0 * x - p.lo - p.hi) / (p.hi - p.lo), -1.0, 1.0);
  return p.start + cheb_eval(p.anti, xi);
}

}  // namespace emproc
