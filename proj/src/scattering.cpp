#include "qss/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qss/classical.hpp"
#include "qss/errors.hpp"
#include "qss/specfun.hpp"

namespace qss {

namespace {

double sign(double x) { return x < 0.0 ? -1.0 : 1.0; }

// arctanh((p / (p + 2 xi))^(1/2)) without cancellation for tiny xi
double arctanh_root(double p, double xi) {
  const double s = std::sqrt(p / (p + 2.0 * xi));
  return 0.5 * std::log((1.0 + s) * (1.0 + s) * (p + 2.0 * xi) / (2.0 * xi));
}

// r^((1-a)/2) 2F1(1/2, -(1-a)/(2(1+a)); (1+3a)/(2(1+a)); (rbar/r)^(1+a)); the
// cusp orbit with turning point rbar takes [F(r1) - F(r2)] / k to fall from r1 to r2.
double transit_primitive(double alpha, double r, double rbar_pow) {
  const double a = 1.0 + alpha;
  const double z = std::min(1.0, rbar_pow / std::pow(r, a));
  return std::pow(r, 0.5 * (1.0 - alpha)) *
         gauss_2f1(0.5, -(1.0 - alpha) / (2.0 * a), (1.0 + 3.0 * alpha) / (2.0 * a), z);
}

// x with V(x) = V(0) - v^2/2 on the side -sign(v)
double kummer_rest_point(const PotentialSpec& pot, double v) {
  const double target = eval_v(pot, 0.0) - 0.5 * v * v;
  const double s = -sign(v);
  double lo = 0.0, hi = pot.ell();
  while (eval_v(pot, s * hi) > target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 4e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (eval_v(pot, s * mid) > target) lo = mid;
    else hi = mid;
  }
  return s * 0.5 * (lo + hi);
}

// outer cusp time plus inner time for a given xi
double total_time(const ScatterSetup& st, double xi) {
  const double alpha = st.pot.alpha(), a = 1.0 + alpha, ell = st.pot.ell();
  const double ell_a = std::pow(ell, a);
  const double r0 = std::pow(std::pow(std::abs(st.x_inf), a) - xi * ell_a, 1.0 / a);
  const double rbar_pow = (0.5 * (1.0 - alpha) - xi) * ell_a;
  const double k = cusp_rate(st.pot.C(), alpha);
  const double outer =
      (transit_primitive(alpha, r0, rbar_pow) - transit_primitive(alpha, ell, rbar_pow)) / k;
  return outer + inner_transit_time(st, xi);
}

// Cusp clock G(r) = F(r) / k on the orbit with |xbar|^(1+alpha) = P ell^(1+alpha):
// the cusp takes |G(r1) - G(r2)| to move between r1 and r2.
struct CuspClock {
  double alpha, a, b, k, ell_a, P, speed_scale;

  CuspClock(const PotentialSpec& pot, double P_)
      : alpha(pot.alpha()),
        a(1.0 + pot.alpha()),
        b(-(1.0 - pot.alpha()) / (2.0 * (1.0 + pot.alpha()))),
        k(cusp_rate(pot.C(), pot.alpha())),
        ell_a(std::pow(pot.ell(), 1.0 + pot.alpha())),
        P(P_),
        speed_scale(std::sqrt(2.0 * pot.C() / (1.0 + pot.alpha()))) {}

  double z(double r) const { return std::min(1.0, P * ell_a / std::pow(r, a)); }
  double G(double r) const { return transit_primitive(alpha, r, P * ell_a) / k; }
  double speed(double r) const {
    return speed_scale * std::pow(r, 0.5 * a) * std::sqrt(std::max(0.0, 1.0 - z(r)));
  }
  // dG/dP at fixed r
  double G_P(double r) const {
    const double w = ell_a / std::pow(r, a);
    return std::pow(r, 0.5 * (1.0 - alpha)) * w * 0.5 * b / (b + 1.0) *
           gauss_2f1(1.5, b + 1.0, b + 2.0, z(r)) / k;
  }
  // r >= r_lo with G(r) = target
  double invert(double target, double r_lo) const {
    double lo = r_lo, hi = 2.0 * r_lo;
    while (G(hi) < target) {
      lo = hi;
      hi *= 2.0;
    }
    double r = 0.5 * (lo + hi);
    for (int i = 0; i < 200 && hi - lo > 4e-16 * hi; ++i) {
      const double g = G(r) - target;
      if (g == 0.0) return r;
      if (g < 0.0) lo = r;
      else hi = r;
      double next = r - g * speed(r);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      r = next;
    }
    return r;
  }
};

}  // namespace

WavePacketSpec ScatterSetup::packet(double hbar_eff) const {
  WavePacketSpec wp;
  wp.sigma = sigma;
  wp.mean_x = mean_x;
  wp.mean_p = v_in;
  wp.hbar_eff = hbar_eff;
  return wp;
}

bool ScatterSetup::outer() const {
  return v_in * v_in > pot.C() * std::pow(pot.ell(), 1.0 + pot.alpha());
}

ScatterSetup make_setup(const PotentialSpec& pot, double v_in, TuningSpec tuning) {
  if (pot.kind() != PotentialKind::Spliced && pot.kind() != PotentialKind::Kummer) {
    throw DomainError("scattering needs the spliced or Kummer potential");
  }
  if (!(v_in != 0.0) || !std::isfinite(v_in)) throw DomainError("v_in must be finite and nonzero");
  if (tuning.mode == Tuning::AtXStar && !(tuning.beta > 0.0)) throw DomainError("beta must be > 0");
  if (tuning.mode == Tuning::OffsetKappa && !(tuning.mu > 0.0)) throw DomainError("mu must be > 0");

  const double C = pot.C(), alpha = pot.alpha(), ell = pot.ell(), a = 1.0 + alpha;
  ScatterSetup st{pot, 0.0, 0.0, 0.0, 0.0, 0.0, tuning, 0.0, 0.0};
  st.v_in = v_in;
  st.tuning = tuning;
  st.gamma = pot.inner_rate();

  const double r_star = std::pow(v_in * v_in * a / (2.0 * C), 1.0 / a);
  st.x_star = -sign(v_in) * r_star;
  st.t_star = std::pow(r_star, 0.5 * (1.0 - alpha)) / cusp_rate(C, alpha);

  if (pot.kind() == PotentialKind::Kummer && tuning.self_consistent) {
    st.x_inf = kummer_rest_point(pot, v_in);
  } else if (st.outer()) {
    st.x_inf = -sign(v_in) *
               std::pow(std::pow(r_star, a) + 0.5 * (1.0 - alpha) * std::pow(ell, a), 1.0 / a);
  } else {
    st.x_inf = -v_in / st.gamma;
  }

  switch (tuning.mode) {
    case Tuning::AtXInf:
      st.sigma = ell;
      st.mean_x = st.x_inf;
      break;
    case Tuning::AtXStar:
      st.sigma = tuning.beta * std::pow(ell, a) / std::pow(r_star, alpha);
      st.mean_x = st.x_star;
      break;
    case Tuning::OffsetKappa:
      st.sigma = ell / tuning.mu;
      st.mean_x = st.x_star - tuning.kappa * st.sigma;
      break;
  }
  return st;
}

double inner_transit_time(const ScatterSetup& setup, double xi) {
  if (!(xi > 0.0)) throw DomainError("xi must be > 0");
  return arctanh_root(1.0 + setup.pot.alpha(), xi) / setup.gamma;
}

double preimage_xi(const ScatterSetup& st, double t) {
  const double alpha = st.pot.alpha(), a = 1.0 + alpha;
  double xi_max = 0.5 * (1.0 - alpha);
  xi_max = std::min(xi_max, std::pow(std::abs(st.x_inf) / st.pot.ell(), a) - 1.0);
  if (!(xi_max > 0.0) || total_time(st, xi_max) > t) {
    throw NoPreimage("no orbit from v_in reaches the origin at t = " + std::to_string(t));
  }
  // total_time decreases in xi; bisect in log xi
  double lo = std::log(std::numeric_limits<double>::min()), hi = std::log(xi_max);
  if (total_time(st, std::exp(lo)) < t) return 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::abs(hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (total_time(st, std::exp(mid)) > t) lo = mid;
    else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

double preimage_of_origin(const ScatterSetup& st, double t, PreimageMode mode) {
  if (!st.outer()) {
    // inside the inverted parabola: x0 cosh(gamma t) + (v/gamma) sinh(gamma t) = 0
    if (!(t > 0.0)) throw NoPreimage("t must be > 0");
    return -st.v_in / st.gamma * std::tanh(st.gamma * t);
  }
  if (!(t >= st.t_star * (1.0 - 1e-12))) {
    throw NoPreimage("t = " + std::to_string(t) + " is before t_star = " +
                     std::to_string(st.t_star));
  }
  const double alpha = st.pot.alpha(), a = 1.0 + alpha, ell = st.pot.ell();
  if (mode == PreimageMode::Auto) {
    mode = ell / std::abs(st.x_star) > 1e-4 ? PreimageMode::Exact : PreimageMode::Asymptotic;
  }
  const double xi = mode == PreimageMode::Exact
                        ? preimage_xi(st, t)
                        : 2.0 * a * std::exp(-2.0 * st.gamma * (t - st.t_star));
  const double r_inf_a = std::pow(std::abs(st.x_inf), a);
  // |x0| = |x_inf| (1 - xi (ell/|x_inf|)^a)^(1/a)
  const double d = xi * std::pow(ell, a) / r_inf_a;
  if (!(d < 1.0)) throw NoPreimage("asymptotic preimage is not defined at t = " + std::to_string(t));
  return st.x_inf * std::exp(std::log1p(-d) / a);
}

ClassicalState scatter_orbit(const ScatterSetup& st, double x0, double t) {
  if (st.pot.kind() != PotentialKind::Spliced || !st.outer()) {
    throw DomainError("scatter_orbit needs the spliced potential with |x_inf| > ell");
  }
  const PotentialSpec& pot = st.pot;
  const double alpha = pot.alpha(), a = 1.0 + alpha, ell = pot.ell(), gamma = st.gamma;
  const double sgn = sign(st.x_inf);
  const double r_inf = std::abs(st.x_inf);
  const double delta = x0 - st.x_inf;
  if (!(sgn * x0 > ell)) throw DomainError("x0 must be on the incoming side with |x0| > ell");
  if (!(t >= 0.0)) throw DomainError("t must be >= 0");

  // |x0|^a = |x_inf|^a - xi ell^a
  const double scale_a = std::pow(r_inf / ell, a);
  const double xi = -scale_a * std::expm1(a * std::log1p(sgn * delta / r_inf));
  const double r0 = sgn * x0;
  const double dr0 = -std::pow(ell, a) / (a * std::pow(r0, alpha));  // d r0 / d xi
  const CuspClock clk(pot, 0.5 * (1.0 - alpha) - xi);

  ClassicalState out;
  out.t = t;
  const double G0 = clk.G(r0);
  const double v0 = clk.speed(r0);
  // inward cusp leg: G(r) = G0 - t
  const double lead = dr0 / v0 - clk.G_P(r0);  // d/dxi of G(r0) with P' = -1

  auto outer_state = [&](double r, double side, double dir, double rhs_prime) {
    // G(r) = const(xi): G_r r' - G_P(r) = rhs_prime
    const double v = clk.speed(r);
    out.x = side * r;
    out.v = side * dir * v;
    const double dr = v * (rhs_prime + clk.G_P(r));
    out.J = side * dr / (sgn * dr0);
  };

  if (clk.P > 1.0) {
    // turns in the cusp region
    const double rbar = ell * std::pow(clk.P, 1.0 / a);
    const double Gbar = clk.G(rbar);
    const double dGbar = -(1.0 - alpha) / (2.0 * a) * Gbar / clk.P;
    const double t_turn = G0 - Gbar;
    if (t <= t_turn) {
      outer_state(clk.invert(G0 - t, rbar), sgn, -1.0, lead);
    } else {
      outer_state(clk.invert(t - G0 + 2.0 * Gbar, rbar), sgn, 1.0, -lead + 2.0 * dGbar);
    }
    return out;
  }

  const double t1 = G0 - clk.G(ell);
  const double dt1 = lead + clk.G_P(ell);
  if (t <= t1) {
    outer_state(clk.invert(G0 - t, ell), sgn, -1.0, lead);
    return out;
  }

  // inverted parabola, u = x/ell, w = v/(gamma ell), entering at u = sgn with w = -sgn s1
  const double e = 2.0 * xi / a;
  const double s1 = std::sqrt(1.0 + e);
  const double ds1 = 1.0 / (a * s1);
  const double tau = gamma * (t - t1);
  double tau_ex = std::numeric_limits<double>::infinity(), dtau_ex = 0.0;
  if (xi > 0.0) {
    tau_ex = 2.0 * arctanh_root(a, xi);
    dtau_ex = 2.0 * (-ds1 / (s1 * s1)) / (e / (1.0 + e));
  } else if (xi < 0.0) {
    tau_ex = std::log((1.0 + s1) * (1.0 + s1) / -e);
    dtau_ex = 2.0 * ds1 / -e;
  }
  if (tau <= tau_ex) {
    const double one_minus_s1 = -e / (1.0 + s1);
    // (1 - s1) e^tau without overflow
    const double grow = one_minus_s1 == 0.0
                            ? 0.0
                            : std::copysign(std::exp(std::log(std::abs(one_minus_s1)) + tau),
                                            one_minus_s1);
    const double decay = (1.0 + s1) * std::exp(-tau);
    const double u = 0.5 * (grow + decay);
    const double w = 0.5 * (grow - decay);
    const double sh = 0.5 * (std::exp(tau) - std::exp(-tau));
    const double du = w * (-gamma * dt1) - sh * ds1;
    out.x = sgn * ell * u;
    out.v = sgn * gamma * ell * w;
    out.J = sgn * ell * du / (sgn * dr0);
    return out;
  }
  const double side = xi > 0.0 ? -sgn : sgn;
  const double G_ell = clk.G(ell);
  const double r = clk.invert(G_ell + (t - t1 - tau_ex / gamma), ell);
  // G(r) = G(ell) + t - t1 - tau_ex / gamma
  outer_state(r, side, 1.0, -clk.G_P(ell) - dt1 - dtau_ex / gamma);
  return out;
}

double y_star(const ScatterSetup& setup, const WavePacketSpec& wp, double t) {
  return (preimage_of_origin(setup, t) - wp.mean_x) / wp.sigma;
}

std::pair<double, double> split_probs(double y) {
  return {0.5 * std::erfc(-y / std::numbers::sqrt2), 0.5 * std::erfc(y / std::numbers::sqrt2)};
}

namespace {

std::vector<double> closed_form_grid(const ScatterSetup& st, const WavePacketSpec& wp,
                                     GridSpec grid) {
  auto x0 = initial_grid(st.pot, wp, grid);
  std::erase(x0, st.x_inf);
  return x0;
}

bool closed_form_applies(const PotentialSpec& pot, const ScatterSetup& st,
                         const WavePacketSpec& wp, GridSpec grid) {
  if (pot.kind() != PotentialKind::Spliced || !st.outer()) return false;
  if (pot.C() != st.pot.C() || pot.alpha() != st.pot.alpha() || pot.ell() != st.pot.ell()) {
    return false;
  }
  if (wp.mean_p != st.v_in) return false;
  const double sgn = sign(st.x_inf);
  const auto x0 = closed_form_grid(st, wp, grid);
  return std::all_of(x0.begin(), x0.end(), [&](double x) { return sgn * x > pot.ell(); });
}

std::vector<WkbEnsemble> closed_form_ensembles(const ScatterSetup& st, const WavePacketSpec& wp,
                                               const std::vector<double>& times, GridSpec grid) {
  wp.validate();
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw DomainError("ensemble times must be sorted and non-negative");
  }
  const auto x0 = closed_form_grid(st, wp, grid);
  std::vector<WkbEnsemble> out;
  for (double t : times) {
    WkbEnsemble e;
    e.t = t;
    e.packet = wp;
    e.x0 = x0;
    for (double x : x0) e.states.push_back(scatter_orbit(st, x, t));
    finish_ensemble(e);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

ScatterRun run_scatter_wkb(const PotentialSpec& pot, const ScatterSetup& setup,
                           const WavePacketSpec& wp, const std::vector<double>& times,
                           GridSpec grid, IntegratorConfig cfg) {
  ScatterRun run;
  if (closed_form_applies(pot, setup, wp, grid)) {
    run.ensembles = closed_form_ensembles(setup, wp, times, grid);
  } else {
    // offsets much below 1e-8 ell around the mean sit inside the integration error
    grid.n_s = std::max(grid.n_s, -8);
    run.ensembles = build_ensembles(pot, wp, times, grid, cfg);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : run.ensembles) {
    ScatterSnapshot s;
    s.t = e.t;
    s.x_c = extremal_position(pot, std::abs(e.t - setup.t_star));
    std::tie(s.p_minus, s.p_plus) = left_right_mass(e);
    s.y_star = e.t >= setup.t_star ? y_star(setup, wp, e.t) : nan;
    double best_l = -1.0, best_r = -1.0;
    s.peak_left = s.peak_right = nan;
    for (std::size_t i = 0; i < e.states.size(); ++i) {
      const double x = e.states[i].x, rho = e.rho0[i] / std::abs(e.states[i].J);
      if (x < 0.0 && rho > best_l) best_l = rho, s.peak_left = x;
      if (x > 0.0 && rho > best_r) best_r = rho, s.peak_right = x;
    }
    run.snapshots.push_back(s);
  }
  return run;
}

}  // namespace qss
