#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

namespace camot {

struct NelderMeadOptions {
  double lo = 0.0;
  double hi = 1.0;
  double init_step = 0.0872664625997164788; // 5 degrees
  double tau_eps = 1e-4;                    // stop when f(best) < tau_eps
  double simplex_tol = 1e-6;                // stop when the 1-D simplex collapses
  int max_iters = 100;
};

struct NelderMeadResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
  int iterations = 0;
};

/// 1-D Nelder--Mead over a bounded interval. Classical coefficients:
/// reflection 1, expansion 2, contraction 0.5, shrink 0.5. Tracks and returns
/// the best point ever evaluated, so a non-convergent run still yields the
/// best-so-far minimizer.
inline NelderMeadResult nelder_mead_1d(const std::function<double(double)>& f,
                                       double init, const NelderMeadOptions& opt) {
  const auto clamp = [&](double x) { return std::clamp(x, opt.lo, opt.hi); };

  NelderMeadResult res;
  double x0 = clamp(init);
  double x1 = clamp(init + opt.init_step);
  if (x1 == x0) x1 = clamp(init - opt.init_step);

  const auto eval = [&](double x) {
    ++res.evaluations;
    const double v = f(x);
    if (res.evaluations == 1 || v < res.fx) {
      res.x = x;
      res.fx = v;
    }
    return v;
  };

  double f0 = eval(x0);
  double f1 = eval(x1);

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    if (f1 < f0) {
      std::swap(x0, x1);
      std::swap(f0, f1);
    }
    // x0 is best, x1 worst.
    if (f0 < opt.tau_eps || std::abs(x1 - x0) < opt.simplex_tol) break;
    res.iterations = iter + 1;

    const double xr = clamp(x0 + (x0 - x1));
    if (xr == x0 || xr == x1) {
      // Reflection clamped onto an existing vertex (domain boundary):
      // contract inside instead of collapsing the simplex on the wall.
      const double xc = x0 + 0.5 * (x1 - x0);
      const double fc = eval(xc);
      x1 = xc;
      f1 = fc;
      continue;
    }
    const double fr = eval(xr);
    if (fr < f0) {
      const double xe = clamp(x0 + 2.0 * (x0 - x1));
      const double fe = eval(xe);
      if (fe < fr) {
        x1 = xe;
        f1 = fe;
      } else {
        x1 = xr;
        f1 = fr;
      }
    } else if (fr < f1) {
      // Outside contraction toward the reflected point.
      const double xc = clamp(x0 + 0.5 * (xr - x0));
      const double fc = eval(xc);
      if (fc <= fr) {
        x1 = xc;
        f1 = fc;
      } else {
        x1 = xr;
        f1 = fr;
      }
    } else {
      // Inside contraction; doubles as the 1-D shrink step.
      const double xc = x0 + 0.5 * (x1 - x0);
      const double fc = eval(xc);
      x1 = xc;
      f1 = fc;
    }
  }

  return res;
}

} // namespace camot
