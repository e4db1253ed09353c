#pragma once

// Adaptive Simpson quadrature with an absolute/relative tolerance split.
// Used for the tail integrals of the summability conditions; integrands are
// smooth except for a sharp but monotone shoulder, which recursion localizes.

#include <cmath>
#include <cstddef>
#include <functional>

namespace brw {

struct QuadResult {
  double value = 0;
  double err_estimate = 0;
  size_t evals = 0;
  bool converged = true;
};

namespace detail {

inline void simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth,
                        QuadResult& out) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  out.evals += 2;
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0) {
    out.value += left + right + delta / 15;
    out.err_estimate += std::abs(delta) / 15;
    out.converged = false;
    return;
  }
  if (std::abs(delta) <= 15 * tol) {
    out.value += left + right + delta / 15;
    out.err_estimate += std::abs(delta) / 15;
    return;
  }
  simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1, out);
  simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1, out);
}

}  // namespace detail

inline QuadResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                            int max_depth = 48) {
  QuadResult out;
  if (!(b > a)) return out;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  out.evals = 3;
  double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, out);
  return out;
}

}  // namespace brw
