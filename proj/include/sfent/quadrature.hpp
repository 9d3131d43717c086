#pragma once

// Quadrature helpers: adaptive Simpson for smooth/oscillatory integrands,
// fixed-step composite Simpson for time integrals, a principal-value
// integrator based on singularity subtraction, and a least-squares line fit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sfent {

namespace detail {

template <typename F, typename V>
V adaptive_simpson_rec(const F& f, double a, double b, V fa, V fm, V fb, V whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const V flm = f(lm), frm = f(rm);
  const V left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const V right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const V delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson on [a, b]. V may be double or std::complex<double>.
template <typename V = double, typename F>
V adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                   int max_depth = 48) {
  if (a == b) return V{};
  const V fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const V whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integrate over [a, b] subdividing at the supplied interior breakpoints
// (quadrature nodes never straddle a kink of the integrand).
template <typename V = double, typename F>
V integrate_piecewise(const F& f, double a, double b, std::vector<double> breaks,
                      double tol = 1e-10) {
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                              [&](double x) { return x <= a || x >= b; }),
               breaks.end());
  std::sort(breaks.begin(), breaks.end());
  V total{};
  double lo = a;
  for (double x : breaks) {
    total += adaptive_simpson<V>(f, lo, x, tol);
    lo = x;
  }
  total += adaptive_simpson<V>(f, lo, b, tol);
  return total;
}

// Composite Simpson with a pinned number of steps (steps is rounded up to
// even). Used where convergence order itself is under test.
template <typename V = double, typename F>
V simpson_composite(const F& f, double a, double b, int steps) {
  if (steps < 2) throw std::invalid_argument("simpson_composite: steps < 2");
  if (steps % 2 != 0) ++steps;
  const double h = (b - a) / steps;
  V sum = f(a) + f(b);
  for (int i = 1; i < steps; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * (h / 3.0);
}

// Principal value of \int_{lo}^{up} g(r)/(u - r) dr by subtraction:
// the regularized part (g(r) - g(u))/(u - r) is smooth, the subtracted
// singular term integrates to g(u) log|(u - lo)/(up - u)|.
template <typename F>
double principal_value(const F& g, double u, double lo, double up,
                       double tol = 1e-10, std::vector<double> breaks = {}) {
  if (!(lo < u && u < up))
    throw std::invalid_argument("principal_value: u outside integration window");
  const double gu = g(u);
  const double h = 1e-6 * (1.0 + std::abs(u));
  const double dgu = (g(u + h) - g(u - h)) / (2.0 * h);
  auto reg = [&](double r) {
    if (std::abs(r - u) < 1e-12 * (1.0 + std::abs(u))) return -dgu;
    return (g(r) - gu) / (u - r);
  };
  breaks.push_back(u);
  double regular = integrate_piecewise<double>(reg, lo, up, std::move(breaks), tol);
  return regular + gu * std::log(std::abs((u - lo) / (up - u)));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw std::runtime_error("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.slope * x[i] - fit.intercept;
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

// Central difference with one Richardson extrapolation step.
template <typename F>
double derivative(const F& f, double x, double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace sfent
