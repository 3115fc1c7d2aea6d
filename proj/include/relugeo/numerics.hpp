#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace relugeo {

namespace detail {

template <class F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance
/// abs_tol. Handles integrands with isolated kinks by subdivision.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth = 60) {
  if (a == b) return 0.0;
  double fa = f(a);
  double fm = f(0.5 * (a + b));
  double fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

/// Bisection on a bracketing interval [a, b] with f(a), f(b) of opposite
/// sign (or zero at an endpoint). Shrinks the bracket until its width is
/// <= width_tol and returns the midpoint.
template <class F>
double bisect_refine(F&& f, double a, double fa, double b, double fb, double width_tol) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  for (int it = 0; it < 200 && (b - a) > width_tol; ++it) {
    double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;  // interval no longer representable
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fa < 0.0) != (fm < 0.0)) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

struct BrentMinResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};

/// Bounded scalar minimization on [lo, hi] by Brent's golden-section /
/// parabolic-interpolation hybrid (the fminbound algorithm). xtol is the
/// absolute tolerance on the abscissa.
template <class F>
BrentMinResult brent_min(F&& f, double lo, double hi, double xtol, int max_iter = 500) {
  constexpr double golden = 0.3819660112501051;  // (3 - sqrt(5)) / 2
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

  double a = lo, b = hi;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  int it = 0;
  for (; it < max_iter; ++it) {
    double m = 0.5 * (a + b);
    double tol1 = eps * std::abs(x) + xtol;
    double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;

    bool use_golden = true;
    if (std::abs(e) > tol1) {
      // Try a parabolic step through (v, w, x).
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (x < m) ? tol1 : -tol1;
        use_golden = false;
      }
    }
    if (use_golden) {
      e = (x < m) ? (b - x) : (a - x);
      d = golden * e;
    }

    double u = (std::abs(d) >= tol1) ? (x + d) : (x + (d > 0.0 ? tol1 : -tol1));
    double fu = f(u);
    if (fu <= fx) {
      if (u < x)
        b = x;
      else
        a = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx, it};
}

}  // namespace relugeo
