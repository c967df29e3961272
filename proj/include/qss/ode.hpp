#pragma once

// Adaptive Dormand-Prince 5(4) integrator with the 4th-order dense output of
// Hairer, Norsett & Wanner. Templated on a fixed-size Eigen column vector.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qss/errors.hpp"

namespace qss::ode {

struct StepControl {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

/// One accepted step together with its continuous extension.
template <typename Vector>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vector y0, y1;
  Vector r2, r3, r4, r5;

  double t1() const { return t0 + h; }

  Vector at(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    return y0 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
  }
};

template <typename Vector>
struct Trial {
  Vector y1;
  Vector k7;
  double err = 0.0;
  DenseStep<Vector> dense;
};

namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp

template <typename Vector>
double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const StepControl& ctl) {
  const auto scale = ctl.abs_tol + ctl.rel_tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array();
  return std::sqrt((err.array() / scale).square().mean());
}

/// Single Dormand-Prince step of size h from (t, y) with first stage k1 = f(t, y).
template <typename Vector, typename Rhs>
Trial<Vector> dopri_step(const Rhs& f, double t, const Vector& y, const Vector& k1, double h,
                         const StepControl& ctl) {
  using namespace dp;
  const Vector k2 = f(t + c2 * h, Vector(y + h * a21 * k1));
  const Vector k3 = f(t + c3 * h, Vector(y + h * (a31 * k1 + a32 * k2)));
  const Vector k4 = f(t + c4 * h, Vector(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
  const Vector k5 = f(t + c5 * h, Vector(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  const Vector k6 =
      f(t + h, Vector(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
  Trial<Vector> out;
  out.y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  out.k7 = f(t + h, out.y1);
  const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.k7);
  out.err = error_norm(err, y, out.y1, ctl);

  auto& d = out.dense;
  d.t0 = t;
  d.h = h;
  d.y0 = y;
  d.y1 = out.y1;
  d.r2 = out.y1 - y;
  d.r3 = h * k1 - d.r2;
  d.r4 = d.r2 - h * out.k7 - d.r3;
  d.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * out.k7);
  return out;
}

template <typename Vector, typename Rhs>
double initial_step(const Rhs& f, double t, const Vector& y, const Vector& k1,
                    const StepControl& ctl) {
  const Vector scale = (ctl.abs_tol + ctl.rel_tol * y.cwiseAbs().array()).matrix();
  auto norm = [&](const Vector& v) { return std::sqrt((v.array() / scale.array()).square().mean()); };
  const double d0 = norm(y);
  const double d1 = norm(k1);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, ctl.max_step);
  const Vector k2 = f(t + h0, Vector(y + h0 * k1));
  const double d2 = norm(Vector(k2 - k1)) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, ctl.max_step});
}

template <typename Vector>
struct SegmentResult {
  double t = 0.0;
  Vector y;
  double h_next = 0.0;  // suggested size for a continuation
  long steps = 0;
  bool stopped = false;  // on_step requested a stop
};

/// Integrates y' = f(t, y) from t0 to t1 (> t0), landing exactly on t1.
/// `on_step(const DenseStep&)` is called after every accepted step and may
/// return true to stop early; the returned state is then that step's end.
template <typename Vector, typename Rhs, typename OnStep>
SegmentResult<Vector> integrate(const Rhs& f, double t0, const Vector& y0, double t1,
                                const StepControl& ctl, double h_init, OnStep&& on_step) {
  SegmentResult<Vector> res;
  res.t = t0;
  res.y = y0;
  if (!(t1 > t0)) {
    res.h_next = h_init;
    return res;
  }
  Vector k1 = f(t0, y0);
  double h = h_init > 0.0 ? std::min(h_init, ctl.max_step) : initial_step(f, t0, y0, k1, ctl);
  bool last_rejected = false;
  double t = t0;
  Vector y = y0;

  while (t < t1) {
    if (res.steps >= ctl.max_steps) {
      throw StepSizeUnderflow("step budget exhausted at t = " + std::to_string(t));
    }
    bool final_step = false;
    double h_try = std::min(h, ctl.max_step);
    if (t + h_try >= t1 || t1 - (t + h_try) < 1e-12 * std::abs(t1)) {
      h_try = t1 - t;
      final_step = true;
    }
    if (h_try <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));
    }

    auto trial = dopri_step(f, t, y, k1, h_try, ctl);
    if (!std::isfinite(trial.err)) {
      h = 0.2 * h_try;
      last_rejected = true;
      continue;
    }
    const double fac = trial.err == 0.0 ? 5.0 : 0.9 * std::pow(trial.err, -0.2);
    if (trial.err <= 1.0) {
      ++res.steps;
      t = final_step ? t1 : t + h_try;
      y = trial.y1;
      k1 = trial.k7;
      const double grow = last_rejected ? std::min(1.0, fac) : std::clamp(fac, 0.2, 5.0);
      // keep the unclipped size when the last step was shortened to hit t1
      h = final_step ? std::max(h, h_try * grow) : h_try * grow;
      last_rejected = false;
      if (on_step(trial.dense)) {
        res.stopped = true;
        break;
      }
    } else {
      h = h_try * std::max(0.2, fac);
      last_rejected = true;
    }
  }
  res.t = t;
  res.y = y;
  res.h_next = h;
  return res;
}

/// Locates a sign change of g along a dense step by bisection + secant
/// (Illinois). Returns the time of the root; g(t_lo) and g(t_hi) must differ
/// in sign.
template <typename Vector, typename G>
double locate_root(const DenseStep<Vector>& step, const G& g, double t_lo, double t_hi,
                   double g_lo, double g_hi) {
  if (g_lo == 0.0) return t_lo;
  if (g_hi == 0.0) return t_hi;
  if ((g_lo > 0.0) == (g_hi > 0.0)) {
    throw EventDetectionFailure("event function does not change sign across the step");
  }
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double tm = (t_lo * g_hi - t_hi * g_lo) / (g_hi - g_lo);
    if (!(tm > t_lo && tm < t_hi)) tm = 0.5 * (t_lo + t_hi);
    const double gm = g(step.at(tm));
    if (gm == 0.0) return tm;
    if ((gm > 0.0) == (g_lo > 0.0)) {
      t_lo = tm;
      g_lo = gm;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    } else {
      t_hi = tm;
      g_hi = gm;
      if (side == 1) g_lo *= 0.5;
      side = 1;
    }
    if (t_hi - t_lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_hi))) {
      return 0.5 * (t_lo + t_hi);
    }
  }
  throw EventDetectionFailure("event root finding did not converge");
}

}  // namespace qss::ode
