#pragma once

// Independent reference computations used by the tests. None of these call into the
// library; they use only <cmath> and Boost special functions.

#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline double gaussian_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * kPi * var);
}

inline double gaussian_log_pdf(double x, double mean, double var) {
  return -0.5 * (x - mean) * (x - mean) / var - 0.5 * std::log(2.0 * kPi * var);
}

inline double gamma_log_pdf(double x, double shape, double rate) {
  if (x <= 0.0) return -INFINITY;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double gamma_pdf(double x, double shape, double rate) {
  return x <= 0.0 ? 0.0 : std::exp(gamma_log_pdf(x, shape, rate));
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature with absolute tolerance. The interval is pre-split
/// into `pieces` so narrow peaks are not skipped by the first coarse estimate.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int pieces = 64, int max_depth = 40) {
  double total = 0.0;
  const double h = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + h * i, hi = i + 1 == pieces ? b : a + h * (i + 1);
    const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, tol / pieces, max_depth);
  }
  return total;
}

/// KL(Gamma(a1, b1) || Gamma(a2, b2)), shape/rate form.
inline double gamma_kl(double a1, double b1, double a2, double b2) {
  return (a1 - a2) * boost::math::digamma(a1) - std::lgamma(a1) + std::lgamma(a2) +
         a2 * (std::log(b1) - std::log(b2)) + a1 * (b2 - b1) / b1;
}

/// Central finite difference of f at x with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Trapezoid rule of f over [a, b] with n intervals.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + h * i);
  return s * h;
}

}  // namespace oracle
