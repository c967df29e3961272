#include "qss/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qss/errors.hpp"
#include "qss/ode.hpp"
#include "qss/specfun.hpp"

namespace qss {

StateVector to_vector(const ClassicalState& s) {
  StateVector y;
  y << s.x, s.v, s.J, s.K, s.Jp, s.Kp, s.S;
  return y;
}

ClassicalState from_vector(const StateVector& y, double t) {
  return {y(0), y(1), y(2), y(3), y(4), y(5), y(6), t};
}

double energy(const PotentialSpec& spec, const ClassicalState& s) {
  return 0.5 * s.v * s.v + eval_v(spec, s.x);
}

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw DomainError("integrator tolerances must be positive");
  }
  if (!std::isnan(max_step) && !(max_step > 0.0)) {
    throw DomainError("integrator max_step must be positive");
  }
}

double IntegratorConfig::resolved_max_step(const PotentialSpec& spec) const {
  return std::isnan(max_step) ? 0.01 * spec.time_unit() : max_step;
}

StateVector rhs_vector(const PotentialSpec& spec, const StateVector& y, Branch branch,
                       Variations variations) {
  const int order = variations == Variations::None ? 1 : variations == Variations::First ? 2 : 3;
  const PotentialDerivs d = eval_derivs_upto(spec, y(0), order, branch);
  StateVector dy = StateVector::Zero();
  dy(0) = y(1);
  dy(1) = -d.dv;
  dy(6) = 0.5 * y(1) * y(1) - d.v;
  if (variations != Variations::None) {
    dy(2) = y(3);
    dy(3) = -d.d2v * y(2);
  }
  if (variations == Variations::Second) {
    dy(4) = y(5);
    dy(5) = -d.d3v * y(2) * y(2) - d.d2v * y(4);
  }
  return dy;
}

ClassicalState rhs(const PotentialSpec& spec, const ClassicalState& s) {
  return from_vector(rhs_vector(spec, to_vector(s), Branch::Auto, Variations::Second), 1.0);
}

namespace {

using Dense = ode::DenseStep<StateVector>;

// Piecewise bookkeeping: which smooth piece of the right-hand side is active.
struct Region {
  PotentialKind kind;
  double ell = 0.0;
  bool inner = false;  // spliced
  int side = 0;        // cusp: sign of x on the current piece, 0 if never crossing

  Branch branch() const {
    if (kind != PotentialKind::Spliced) return Branch::Auto;
    return inner ? Branch::Inner : Branch::Outer;
  }

  bool has_events() const {
    return kind == PotentialKind::Spliced || (kind == PotentialKind::Cusp && side != 0);
  }

  // Signed distance to the boundary of the current piece; changes sign on exit.
  double boundary(const StateVector& y) const {
    if (kind == PotentialKind::Spliced) return y(0) * y(0) - ell * ell;
    return y(0);
  }

  bool outside(const StateVector& y) const {
    if (kind == PotentialKind::Spliced) {
      const double g = boundary(y);
      return inner ? g >= 0.0 : g <= 0.0;
    }
    return side * y(0) < 0.0;
  }
};

Region initial_region(const PotentialSpec& spec, const ClassicalState& s) {
  Region r{spec.kind(), spec.ell()};
  if (spec.kind() == PotentialKind::Spliced) {
    const double ax = std::abs(s.x);
    r.inner = ax < spec.ell() || (ax == spec.ell() && s.x * s.v < 0.0);
  } else if (spec.kind() == PotentialKind::Cusp) {
    if (s.x != 0.0) {
      r.side = s.x > 0.0 ? 1 : -1;
    } else if (s.v != 0.0) {
      r.side = s.v > 0.0 ? 1 : -1;
    }
  }
  return r;
}

struct Pending {
  enum class Kind { Region, User } kind;
  double t;
  double t0;
  StateVector y0;
};

}  // namespace

EvolveResult evolve_with(const PotentialSpec& spec, const ClassicalState& s0, double t_end,
                         const IntegratorConfig& cfg, const EvolveOptions& opts) {
  cfg.validate();
  if (!(t_end >= s0.t)) throw DomainError("evolve needs t_end >= t0");

  ode::StepControl ctl;
  ctl.rel_tol = cfg.rel_tol;
  ctl.abs_tol = cfg.abs_tol;
  ctl.max_step = cfg.resolved_max_step(spec);

  EvolveResult out;
  Region region = initial_region(spec, s0);
  if (spec.kind() == PotentialKind::Cusp && cfg.variations != Variations::None &&
      s0.x * s0.v < 0.0 && energy(spec, s0) >= 0.0 &&
      s0.t + exact_cusp_time(spec, s0.x, s0.v, 0.0) <= t_end) {
    throw NonSmoothPoint("cusp trajectory reaches x = 0 before t_end; variations are undefined there");
  }
  const Variations variations = cfg.variations;
  auto f = [&](double, const StateVector& y) {
    return rhs_vector(spec, y, region.branch(), variations);
  };

  double t = s0.t;
  StateVector y = to_vector(s0);
  double h = 0.0;
  if (opts.record_steps) out.samples.push_back(s0);

  double g_prev = opts.event ? opts.event(s0) : 0.0;
  std::optional<Pending> pending;

  auto on_step = [&](const Dense& d) {
    std::optional<double> t_region;
    if (region.has_events()) {
      constexpr std::array<double, 4> thetas{0.25, 0.5, 0.75, 1.0};
      double theta_prev = 0.0;
      for (double theta : thetas) {
        const StateVector yt = theta == 1.0 ? d.y1 : d.at(d.t0 + theta * d.h);
        if (region.outside(yt)) {
          const double ta = d.t0 + theta_prev * d.h;
          const double tb = theta == 1.0 ? d.t1() : d.t0 + theta * d.h;
          const double ga = region.boundary(theta_prev == 0.0 ? d.y0 : d.at(ta));
          const double gb = region.boundary(yt);
          auto g = [&](const StateVector& s) { return region.boundary(s); };
          t_region = ode::locate_root(d, g, ta, tb, ga, gb);
          if (!(*t_region > d.t0)) {
            throw EventDetectionFailure("grazing contact with a potential boundary at t = " +
                                        std::to_string(d.t0));
          }
          break;
        }
        theta_prev = theta;
      }
    }
    if (opts.event) {
      const double t_hi = t_region ? *t_region : d.t1();
      const StateVector y_hi = t_region ? d.at(t_hi) : d.y1;
      const double g_hi = opts.event(from_vector(y_hi, t_hi));
      if (g_prev < 0.0 && g_hi >= 0.0) {
        auto g = [&](const StateVector& s) { return opts.event(from_vector(s, 0.0)); };
        const double tu = ode::locate_root(d, g, d.t0, t_hi, g_prev, g_hi);
        pending = Pending{Pending::Kind::User, tu, d.t0, d.y0};
        return true;
      }
      if (!t_region) g_prev = g_hi;
    }
    if (t_region) {
      pending = Pending{Pending::Kind::Region, *t_region, d.t0, d.y0};
      return true;
    }
    if (opts.record_steps) out.samples.push_back(from_vector(d.y1, d.t1()));
    return false;
  };

  auto never = [](const Dense&) { return false; };
  std::size_t next_sample = 0;
  const auto& st = opts.sample_times;
  while (next_sample < st.size() && st[next_sample] <= t) ++next_sample;

  while (t < t_end) {
    const bool to_sample = next_sample < st.size() && st[next_sample] < t_end;
    const double t_stop = to_sample ? st[next_sample] : t_end;
    pending.reset();
    auto seg = ode::integrate(f, t, y, t_stop, ctl, h, on_step);
    out.steps += seg.steps;

    if (pending) {
      const double dt = pending->t - pending->t0;
      auto redo = ode::integrate(f, pending->t0, pending->y0, pending->t, ctl, dt, never);
      out.steps += redo.steps;
      t = pending->t;
      y = redo.y;
      h = std::max(seg.h_next, dt);
      if (pending->kind == Pending::Kind::User) {
        out.event_state = from_vector(y, t);
        if (opts.record_steps) out.samples.push_back(*out.event_state);
        out.final_state = *out.event_state;
        return out;
      }
      // crossing a boundary of the piecewise potential
      if (region.kind == PotentialKind::Spliced) {
        const double xc = y(0) > 0.0 ? region.ell : -region.ell;
        y(0) = xc;
        if (variations == Variations::Second) {
          y(5) -= spliced_d2v_jump(spec, xc) * y(2) * y(2) / std::abs(y(1));
        }
        region.inner = !region.inner;
      } else {
        if (variations != Variations::None) {
          throw NonSmoothPoint("cusp trajectory reaches x = 0 at t = " + std::to_string(t) +
                               "; variations are undefined there");
        }
        y(0) = 0.0;
        region.side = -region.side;
      }
      ++out.crossings;
      if (opts.event) g_prev = opts.event(from_vector(y, t));
      if (opts.record_steps) out.samples.push_back(from_vector(y, t));
      continue;
    }

    t = t_stop;
    y = seg.y;
    h = seg.h_next;
    if (to_sample) {
      ++next_sample;
      if (opts.on_sample) opts.on_sample(from_vector(y, t));
    }
  }
  out.final_state = from_vector(y, t);
  if (opts.on_sample && next_sample < st.size() && st[next_sample] == t_end) {
    opts.on_sample(out.final_state);
  }
  if (opts.record_steps && out.samples.back().t != t) out.samples.push_back(out.final_state);
  return out;
}

std::vector<ClassicalState> evolve(const PotentialSpec& spec, const ClassicalState& s0,
                                   double t_end, const IntegratorConfig& cfg) {
  EvolveOptions opts;
  opts.record_steps = true;
  auto res = evolve_with(spec, s0, t_end, cfg, opts);
  if (!res.samples.empty()) res.samples.back() = res.final_state;
  return std::move(res.samples);
}

// ---- cusp --------------------------------------------------------------------

double cusp_rate(double C, double alpha) {
  return 0.5 * (1.0 - alpha) * std::sqrt(2.0 * C / (1.0 + alpha));
}

double extremal_position(const PotentialSpec& spec, double t) {
  const double k = cusp_rate(spec.C(), spec.alpha());
  return std::pow(k * t, 2.0 / (1.0 - spec.alpha()));
}

double extremal_velocity(const PotentialSpec& spec, double t) {
  const double a = spec.alpha();
  const double k = cusp_rate(spec.C(), a);
  return 2.0 / (1.0 - a) * k * std::pow(k * t, (1.0 + a) / (1.0 - a));
}

namespace {

// Level set of H0 = v^2/2 - C|x|^(1+a)/(1+a) on one side of the origin.
// G(r) increases with r and G(r1) - G(r0) = k * (travel time from r0 to r1).
struct CuspOrbit {
  double alpha;
  double C;
  double k;
  double H0;
  double xbar;  // (|H0|(1+a)/C)^(1/(1+a))
  double G0;    // G(0), meaningful when H0 >= 0

  double b() const { return -(1.0 - alpha) / (2.0 * (1.0 + alpha)); }

  double G(double r) const {
    const double p = 0.5 * (1.0 - alpha);
    if (xbar == 0.0) return std::pow(r, p);
    if (H0 > 0.0 && r < xbar) {
      // G(r) - G(0) = (1-a)/2 * int_0^r (s^(1+a) + xbar^(1+a))^(-1/2) ds
      const double q = 1.0 / (1.0 + alpha);
      const double z = -std::pow(r / xbar, 1.0 + alpha);
      return G0 + p * std::pow(xbar, -0.5 * (1.0 + alpha)) * r * gauss_2f1(0.5, q, 1.0 + q, z);
    }
    const double w = std::pow(xbar / r, 1.0 + alpha);
    const double z = H0 > 0.0 ? -w : std::min(w, 1.0);
    return std::pow(r, p) * gauss_2f1(0.5, b(), b() + 1.0, z);
  }

  double dG(double r) const {
    const double ra = std::pow(r, 1.0 + alpha);
    const double xa = std::pow(xbar, 1.0 + alpha);
    const double s = H0 >= 0.0 ? ra + xa : ra - xa;
    return s > 0.0 ? 0.5 * (1.0 - alpha) / std::sqrt(s) : std::numeric_limits<double>::infinity();
  }

  double r_min() const { return H0 < 0.0 ? xbar : 0.0; }

  double speed(double r) const {
    const double v2 = 2.0 * H0 + 2.0 * C * std::pow(r, 1.0 + alpha) / (1.0 + alpha);
    return std::sqrt(std::max(v2, 0.0));
  }

  // Solves G(r) = target on r >= r_min().
  double invert(double target) const {
    double lo = r_min();
    const double g_lo = G(lo);
    if (target <= g_lo) return lo;
    double hi = std::max(2.0 * lo, std::pow(std::max(target, 1e-300), 2.0 / (1.0 - alpha)));
    if (!(hi > lo)) hi = lo + 1.0;
    while (G(hi) < target) hi *= 2.0;
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
      const double g = G(r) - target;
      if (g == 0.0) return r;
      if (g < 0.0) lo = r;
      else hi = r;
      double next = r - g / dG(r);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - r) <= 1e-15 * r || hi - lo <= 1e-15 * hi) return next;
      r = next;
    }
    throw ConvergenceError("cusp implicit solution: inversion did not converge");
  }
};

CuspOrbit make_orbit(const PotentialSpec& spec, double x0, double v0) {
  if (spec.kind() != PotentialKind::Cusp) throw DomainError("cusp closed form needs a cusp potential");
  CuspOrbit o{};
  o.alpha = spec.alpha();
  o.C = spec.C();
  o.k = cusp_rate(o.C, o.alpha);
  const double r0 = std::abs(x0);
  o.H0 = 0.5 * v0 * v0 - o.C * std::pow(r0, 1.0 + o.alpha) / (1.0 + o.alpha);
  o.xbar = std::pow(std::abs(o.H0) * (1.0 + o.alpha) / o.C, 1.0 / (1.0 + o.alpha));
  if (o.H0 > 0.0) {
    const double c = o.b() + 1.0;
    o.G0 = std::pow(o.xbar, 0.5 * (1.0 - o.alpha)) * std::tgamma(c) * std::tgamma(0.5 - o.b()) /
           std::sqrt(std::numbers::pi);
  }
  if (o.H0 < 0.0) o.xbar = std::min(o.xbar, r0);  // rounding at the turning point
  return o;
}

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<double> cusp_arrival_times(const PotentialSpec& spec, double x0, double v0, double x) {
  if (x0 == 0.0 && v0 == 0.0) {
    throw DomainError("cusp closed form is not unique from (x0, v0) = (0, 0)");
  }
  const CuspOrbit o = make_orbit(spec, x0, v0);
  const double r0 = std::abs(x0);
  const double r = std::abs(x);
  const int s0 = x0 != 0.0 ? sgn(x0) : sgn(v0);
  std::vector<double> times;

  if (o.H0 < 0.0) {
    if (x != 0.0 && sgn(x) != s0) throw Unreachable("target on the far side of a bound orbit");
    if (r < o.xbar * (1.0 - 1e-14)) throw Unreachable("target below the turning point");
    const double g = o.G(std::max(r, o.xbar));
    const double g0 = o.G(r0);
    if (x0 * v0 < 0.0) {
      const double t_turn = (g0 - o.G(o.xbar)) / o.k;
      if (r <= r0) times.push_back((g0 - g) / o.k);
      const double t_out = t_turn + (g - o.G(o.xbar)) / o.k;
      if (times.empty() || t_out > times.back()) times.push_back(t_out);
    } else {
      if (r < r0 * (1.0 - 1e-14)) throw Unreachable("target behind an outbound trajectory");
      times.push_back(std::max(0.0, (g - g0) / o.k));
    }
    return times;
  }

  // H0 >= 0: velocity never vanishes (except the separatrix at the origin),
  // so the motion is monotone in x.
  const int d = v0 != 0.0 ? sgn(v0) : -s0;
  if ((x - x0) * d < 0.0) throw Unreachable("target behind a monotone trajectory");
  if (x0 == 0.0 || x == 0.0 || sgn(x) == sgn(x0)) {
    times.push_back(std::abs(o.G(r) - o.G(r0)) / o.k);
  } else {
    times.push_back((o.G(r0) - o.G(0.0) + o.G(r) - o.G(0.0)) / o.k);
  }
  return times;
}

double exact_cusp_time(const PotentialSpec& spec, double x0, double v0, double x) {
  return cusp_arrival_times(spec, x0, v0, x).front();
}

PhasePoint cusp_position_at(const PotentialSpec& spec, double x0, double v0, double t) {
  if (!(t >= 0.0)) throw DomainError("cusp_position_at needs t >= 0");
  if (x0 == 0.0 && v0 == 0.0) {
    throw DomainError("cusp closed form is not unique from (x0, v0) = (0, 0)");
  }
  const CuspOrbit o = make_orbit(spec, x0, v0);
  const double r0 = std::abs(x0);
  const int s0 = x0 != 0.0 ? sgn(x0) : sgn(v0);
  const double g0 = o.G(r0);

  double r;
  int side = s0;
  int dir;  // +1 moving away from the origin
  if (o.H0 < 0.0) {
    if (x0 * v0 < 0.0) {
      const double t_turn = (g0 - o.G(o.xbar)) / o.k;
      if (t <= t_turn) {
        r = o.invert(g0 - o.k * t);
        dir = -1;
      } else {
        r = o.invert(o.G(o.xbar) + o.k * (t - t_turn));
        dir = 1;
      }
    } else {
      r = o.invert(g0 + o.k * t);
      dir = 1;
    }
  } else {
    const int d = v0 != 0.0 ? sgn(v0) : -s0;
    if (x0 == 0.0 || d == s0) {
      r = o.invert(g0 + o.k * t);
      side = d;
      dir = 1;
    } else {
      const double t_origin = (g0 - o.G(0.0)) / o.k;
      if (t <= t_origin) {
        r = o.invert(g0 - o.k * t);
        dir = -1;
      } else {
        r = o.invert(o.G(0.0) + o.k * (t - t_origin));
        side = -s0;
        dir = 1;
      }
    }
  }
  return {side * r, side * dir * o.speed(r)};
}

// ---- spliced -----------------------------------------------------------------

namespace {

void require_spliced(const PotentialSpec& spec, double x0) {
  if (spec.kind() != PotentialKind::Spliced) {
    throw DomainError("closed form needs the spliced potential");
  }
  if (!(x0 > 0.0)) throw DomainError("spliced closed form needs x0 > 0");
}

}  // namespace

double spliced_exit_time(const PotentialSpec& spec, double x0) {
  require_spliced(spec, x0);
  if (x0 >= spec.ell()) return 0.0;
  return std::acosh(spec.ell() / x0) / spec.inner_rate();
}

double spliced_position_closed(const PotentialSpec& spec, double x0, double t) {
  require_spliced(spec, x0);
  const PotentialSpec outer = PotentialSpec::cusp(spec.C(), spec.alpha());
  const double ell = spec.ell();
  if (x0 >= ell) return cusp_position_at(outer, x0, 0.0, t).x;
  const double gamma = spec.inner_rate();
  const double t_ell = spliced_exit_time(spec, x0);
  if (t <= t_ell) return x0 * std::cosh(gamma * t);
  const double v_ell = gamma * std::sqrt(ell * ell - x0 * x0);
  return cusp_position_at(outer, ell, v_ell, t - t_ell).x;
}

double spliced_jacobian_closed(const PotentialSpec& spec, double x0, double t) {
  require_spliced(spec, x0);
  const double a = spec.alpha();
  const double ell = spec.ell();
  const double k = cusp_rate(spec.C(), a);
  if (t <= 0.0) return 1.0;
  const double xt = spliced_position_closed(spec, x0, t);
  if (x0 >= ell) {
    const double root = std::sqrt(std::max(0.0, std::pow(xt, 1.0 + a) - std::pow(x0, 1.0 + a)));
    return (xt - k * t * root) / x0;
  }
  const double gamma = spec.inner_rate();
  const double t_ell = spliced_exit_time(spec, x0);
  if (t <= t_ell) return std::cosh(gamma * t);
  const double u = x0 / ell;
  const double ell_a = std::pow(ell, 1.0 + a);
  const double xbar_a = ell_a * (0.5 * (1.0 - a) + 0.5 * (1.0 + a) * u * u);
  const double denom = xbar_a * std::pow(ell, 1.0 - a);
  const double root = std::sqrt(std::max(0.0, std::pow(xt, 1.0 + a) - xbar_a));
  const double bracket =
      -k * (t - t_ell) * x0 / denom + 0.5 * (1.0 - a) * std::sqrt(2.0 / (1.0 + a)) *
                                           std::pow(ell, 0.5 * (1.0 + a)) *
                                           std::sqrt(ell * ell - x0 * x0) / (x0 * xbar_a);
  return x0 * xt / denom + root * bracket;
}

// ---- long-time limit ---------------------------------------------------------

double jpj_infinity(double alpha, double u0) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("jpj_infinity needs 0 < alpha < 1");
  if (!(u0 > 0.0)) throw DomainError("jpj_infinity needs u0 > 0");
  if (u0 == 1.0) throw SingularPoint("-J'/J diverges as 1/sqrt(1 - u0^2) at u0 = 1");
  if (u0 > 1.0) return (1.0 + alpha) / (2.0 * u0);
  const double b = -(1.0 - alpha) / (2.0 * (1.0 + alpha));
  const double c = (1.0 + 3.0 * alpha) / (2.0 * (1.0 + alpha));
  const double u2 = u0 * u0;
  const double w = (1.0 - alpha) + (1.0 + alpha) * u2;
  const double F = gauss_2f1(0.5, b, c, 0.5 * w);
  const double A = 2.0 / (1.0 - alpha) * std::sqrt(0.5 * (1.0 + alpha));
  return -1.0 / u0 + (1.0 + 3.0 * alpha) * u0 / w +
         2.0 / (u0 * (1.0 - u2 + A * u2 * std::sqrt(1.0 - u2) * F));
}

double jpj_singular_coefficient(double alpha) {
  const double c = (1.0 + 3.0 * alpha) / (2.0 * (1.0 + alpha));
  const double F1 = std::tgamma(c) * std::sqrt(std::numbers::pi) / std::tgamma(c - 0.5);
  return (1.0 - alpha) * std::sqrt(2.0 / (1.0 + alpha)) / F1;
}

double richardson_toy(double r0, double C, double eps_diss, double t) {
  if (!(r0 >= 0.0)) throw DomainError("richardson_toy needs r0 >= 0");
  const double base = std::pow(r0, 2.0 / 3.0) + 2.0 / 3.0 * C * std::cbrt(eps_diss) * t;
  return std::pow(base, 1.5);
}

}  // namespace qss
