#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qss/classical.hpp"
#include "qss/errors.hpp"
#include "qss/ode.hpp"

using oracle::rel_err;
using qss::ClassicalState;
using qss::PotentialSpec;

namespace {

const double kAlpha = 1.0 / 3.0;

qss::IntegratorConfig tight(qss::Variations v = qss::Variations::Second) {
  qss::IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  cfg.variations = v;
  return cfg;
}

ClassicalState at_rest(double x0) {
  ClassicalState s;
  s.x = x0;
  return s;
}

ClassicalState state_at(const PotentialSpec& spec, const ClassicalState& s0, double t,
                        const qss::IntegratorConfig& cfg) {
  qss::EvolveOptions opts;
  opts.record_steps = false;
  return qss::evolve_with(spec, s0, t, cfg, opts).final_state;
}

}  // namespace

TEST_CASE("rhs of the free particle") {
  ClassicalState s;
  s.x = 0.4;
  s.v = 1.5;
  const auto d = qss::rhs(PotentialSpec::free_particle(), s);
  CHECK(d.x == 1.5);
  CHECK(d.v == 0.0);
  CHECK(d.J == 0.0);
  CHECK(d.K == 0.0);
  CHECK(d.Jp == 0.0);
  CHECK(d.Kp == 0.0);
  CHECK(d.S == doctest::Approx(1.125));
}

TEST_CASE("inverted oscillator: J_t = cosh t") {
  const auto io = PotentialSpec::inverted_oscillator(1.0);
  ClassicalState s0;
  s0.x = 0.3;
  s0.v = -0.2;
  for (double t : {0.5, 2.0, 6.0}) {
    const auto s = state_at(io, s0, t, tight());
    CHECK(rel_err(s.J, std::cosh(t)) < 1e-9);
    CHECK(rel_err(s.K, std::sinh(t)) < 1e-9);
    CHECK(std::abs(s.Jp) < 1e-12);
    CHECK(rel_err(s.x, 0.3 * std::cosh(t) - 0.2 * std::sinh(t)) < 1e-9);
  }
}

TEST_CASE("spliced inner region follows x0 cosh and exits at arccosh(ell/x0)") {
  const double ell = 0.8;
  const auto sp = PotentialSpec::spliced(1.7, kAlpha, ell);
  const double T = sp.time_unit();
  const double x0 = 0.1 * ell;
  const auto traj = qss::evolve(sp, at_rest(x0), 5.0 * T, tight());
  bool found = false;
  for (const auto& s : traj) {
    if (s.x == ell && !found) {
      found = true;
      CHECK(rel_err(s.t, std::acosh(10.0) * T) < 1e-10);
    }
    if (s.x < ell) CHECK(rel_err(s.x, x0 * std::cosh(s.t / T)) < 1e-9);
  }
  CHECK(found);
}

TEST_CASE("cusp extremal solution is reproduced") {
  const auto cusp = PotentialSpec::cusp(1.2, kAlpha);
  const double t1 = 1.5;
  ClassicalState s0;
  s0.x = qss::extremal_position(cusp, t1);
  s0.v = qss::extremal_velocity(cusp, t1);
  s0.t = t1;
  for (double t : {2.0, 4.0, 10.0}) {
    const auto s = state_at(cusp, s0, t, tight());
    CHECK(rel_err(s.x, qss::extremal_position(cusp, t)) < 1e-8);
    CHECK(rel_err(s.v, qss::extremal_velocity(cusp, t)) < 1e-8);
  }
}

TEST_CASE("fixed point at the origin") {
  const std::vector<PotentialSpec> specs{PotentialSpec::kummer(1.0, kAlpha, 0.5),
                                         PotentialSpec::spliced(1.0, kAlpha, 0.5),
                                         PotentialSpec::inverted_oscillator(2.0)};
  for (const auto& spec : specs) {
    const double curv = -qss::eval_d2v(spec, 0.0);
    const double t = 3.0 * spec.time_unit();
    const auto s = state_at(spec, ClassicalState{}, t, tight());
    CHECK(s.x == 0.0);
    CHECK(s.v == 0.0);
    CHECK(rel_err(s.J, std::cosh(std::sqrt(curv) * t)) < 1e-9);
  }
}

TEST_CASE("energy is conserved") {
  const auto k = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  ClassicalState s0;
  s0.x = 0.5;
  s0.v = 0.3;
  qss::IntegratorConfig cfg;
  const double H0 = qss::energy(k, s0);
  const auto traj = qss::evolve(k, s0, 20.0, cfg);
  double drift = 0.0;
  for (const auto& s : traj) drift = std::max(drift, std::abs(qss::energy(k, s) - H0));
  CHECK(drift <= 10.0 * cfg.rel_tol * std::abs(H0));
}

TEST_CASE("exact cusp time: extremal self-consistency and trivial cases") {
  const auto cusp = PotentialSpec::cusp(1.0, kAlpha);
  const double t1 = 0.7, t2 = 3.1;
  const double x1 = qss::extremal_position(cusp, t1), v1 = qss::extremal_velocity(cusp, t1);
  CHECK(rel_err(qss::exact_cusp_time(cusp, x1, v1, qss::extremal_position(cusp, t2)), t2 - t1) <
        1e-12);
  CHECK(qss::exact_cusp_time(cusp, 1.3, 0.0, 1.3) == 0.0);
  CHECK_THROWS_AS(qss::exact_cusp_time(cusp, 1.3, 0.0, 1.0), qss::Unreachable);
}

TEST_CASE("exact cusp time: inbound bound orbit turns at xbar") {
  const auto cusp = PotentialSpec::cusp(1.0, kAlpha);
  const double x0 = 2.0, v0 = -0.6;
  const double H0 = 0.5 * v0 * v0 + qss::eval_v(cusp, x0);
  REQUIRE(H0 < 0.0);
  const double xbar = std::pow(-H0 * (1.0 + kAlpha), 1.0 / (1.0 + kAlpha));
  const double t_turn = qss::exact_cusp_time(cusp, x0, v0, xbar);
  CHECK_THROWS_AS(qss::exact_cusp_time(cusp, x0, v0, 0.99 * xbar), qss::Unreachable);
  ClassicalState s0;
  s0.x = x0;
  s0.v = v0;
  const auto before = state_at(cusp, s0, t_turn * 0.999, tight());
  const auto at = state_at(cusp, s0, t_turn, tight());
  const auto after = state_at(cusp, s0, t_turn * 1.001, tight());
  CHECK(before.v < 0.0);
  CHECK(after.v > 0.0);
  CHECK(std::abs(at.v) < 1e-6 * std::abs(v0));
  CHECK(rel_err(at.x, xbar) < 1e-10);
}

TEST_CASE("cusp trajectories agree with the implicit solution (randomized)") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> ux(-3.0, 3.0), uv(-3.0, 3.0);
  const auto cusp = PotentialSpec::cusp(1.0, kAlpha);
  const auto cfg = tight(qss::Variations::None);
  double worst = 0.0, worst_time = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ClassicalState s0;
    s0.x = ux(rng);
    s0.v = uv(rng);
    const double H0 = qss::energy(cusp, s0);
    const double xbar = std::pow(std::abs(H0) * (1.0 + kAlpha), 1.0 / (1.0 + kAlpha));
    std::vector<double> times;
    for (int i = 1; i <= 40; ++i) times.push_back(0.5 * i);
    qss::EvolveOptions opts;
    opts.record_steps = false;
    opts.sample_times = times;
    opts.on_sample = [&](const ClassicalState& s) {
      const auto exact = qss::cusp_position_at(cusp, s0.x, s0.v, s.t);
      const double scale = std::max({std::abs(exact.x), std::abs(s0.x), xbar});
      worst = std::max(worst, std::abs(s.x - exact.x) / scale);
      const auto arrivals = qss::cusp_arrival_times(cusp, s0.x, s0.v, exact.x);
      double best = 1e300;
      for (double ta : arrivals) best = std::min(best, std::abs(ta - s.t));
      worst_time = std::max(worst_time, best / s.t);
    };
    qss::evolve_with(cusp, s0, 20.0, cfg, opts);
  }
  CHECK(worst <= 1e-8);
  CHECK(worst_time <= 1e-8);
}

TEST_CASE("cusp variations at the origin are rejected") {
  const auto cusp = PotentialSpec::cusp(1.0, kAlpha);
  ClassicalState s0;
  s0.x = 1.0;
  s0.v = -3.0;
  CHECK_THROWS_AS(qss::evolve(cusp, s0, 5.0), qss::NonSmoothPoint);
}

TEST_CASE("spliced closed-form Jacobian matches the variational equations") {
  const double ell = 1.3;
  const auto sp = PotentialSpec::spliced(0.9, kAlpha, ell);
  const double T = sp.time_unit();
  CHECK(qss::spliced_jacobian_closed(sp, 0.4 * ell, 0.0) == 1.0);
  for (double u0 : {0.1, 0.5, 0.9, 1.0, 2.0, 5.0}) {
    for (double tau : {0.5, 1.0, 3.0, 8.0, 20.0}) {
      const double x0 = u0 * ell;
      const auto s = state_at(sp, at_rest(x0), tau * T, tight(qss::Variations::First));
      CAPTURE(u0);
      CAPTURE(tau);
      CHECK(rel_err(qss::spliced_position_closed(sp, x0, tau * T), s.x) < 1e-8);
      CHECK(rel_err(qss::spliced_jacobian_closed(sp, x0, tau * T), s.J) < 1e-6);
    }
  }
  // inner branch is independent of x0
  CHECK(qss::spliced_jacobian_closed(sp, 0.05 * ell, 0.7 * T) == doctest::Approx(std::cosh(0.7)));
}

TEST_CASE("jpj_infinity values") {
  CHECK(qss::jpj_infinity(kAlpha, 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(qss::jpj_infinity(kAlpha, 1.0), qss::SingularPoint);
  // ~ 1/u0 as u0 -> 0
  for (double u0 : {1e-4, 1e-6}) CHECK(qss::jpj_infinity(kAlpha, u0) * u0 == doctest::Approx(1.0).epsilon(1e-3));
  // ~ c / sqrt(1 - u0^2) as u0 -> 1-
  const double c = qss::jpj_singular_coefficient(kAlpha);
  const double u0 = 1.0 - 1e-10;
  CHECK(qss::jpj_infinity(kAlpha, u0) * std::sqrt(1.0 - u0 * u0) == doctest::Approx(c).epsilon(1e-3));
}

TEST_CASE("jpj_infinity matches long-time variational integration") {
  const double ell = 1.0;
  const auto sp = PotentialSpec::spliced(1.0, kAlpha, ell);
  const double T = sp.time_unit();
  qss::IntegratorConfig cfg = tight();
  cfg.max_step = std::numeric_limits<double>::infinity();
  for (double u0 : {0.5, 3.0}) {
    const auto s = state_at(sp, at_rest(u0 * ell), 50.0 * T, cfg);
    const double from_second = -s.Jp / s.J * ell;
    // centered differencing of log J in x0
    const double h = 1e-4 * ell;
    const auto sp_ = state_at(sp, at_rest(u0 * ell + h), 50.0 * T, cfg);
    const auto sm_ = state_at(sp, at_rest(u0 * ell - h), 50.0 * T, cfg);
    const double from_fd = -(std::log(sp_.J) - std::log(sm_.J)) / (2.0 * h) * ell;
    CAPTURE(u0);
    CHECK(rel_err(from_second, from_fd) < 1e-6);
    // slow (~1/tau) approach to the limit
    CHECK(rel_err(from_second, qss::jpj_infinity(kAlpha, u0)) < 5e-2);
    const auto late = state_at(sp, at_rest(u0 * ell), 5e5 * T, cfg);
    CHECK(rel_err(-late.Jp / late.J * ell, qss::jpj_infinity(kAlpha, u0)) < 1e-4);
  }
}

TEST_CASE("second-variation Wronskian identity") {
  // d/dt (Kp J - Jp K) = -V''' J^3, checked against an independent quadrature
  const auto k = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  using V8 = Eigen::Matrix<double, 8, 1>;
  auto f = [&](double, const V8& y) {
    qss::StateVector s = y.head<7>();
    V8 d;
    d.head<7>() = qss::rhs_vector(k, s, qss::Branch::Auto, qss::Variations::Second);
    d(7) = -qss::eval_d3v(k, y(0)) * y(2) * y(2) * y(2);
    return d;
  };
  V8 y0 = V8::Zero();
  y0(0) = 0.2;
  y0(2) = 1.0;
  qss::ode::StepControl ctl;
  ctl.rel_tol = 1e-10;
  ctl.abs_tol = 1e-12;
  double worst = 0.0;
  qss::ode::integrate(f, 0.0, y0, 15.0, ctl, 0.0, [&](const qss::ode::DenseStep<V8>& d) {
    const V8& y = d.y1;
    const double w = y(5) * y(2) - y(4) * y(3);
    const double scale = std::abs(y(5) * y(2)) + std::abs(y(4) * y(3));
    worst = std::max(worst, std::abs(w - y(7)) / scale);
    return false;
  });
  CHECK(worst <= 10.0 * ctl.rel_tol);
}

TEST_CASE("-J'/J increases monotonically for x0 > 0") {
  const auto k = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  for (double x0 : {0.05, 0.5, 3.0}) {
    const auto traj = qss::evolve(k, at_rest(x0), 12.0);
    double prev = -1e300;
    bool monotone = true;
    for (const auto& s : traj) {
      const double r = -s.Jp / s.J;
      if (r < prev - 1e-9 * std::abs(prev)) monotone = false;
      prev = r;
    }
    CAPTURE(x0);
    CHECK(monotone);
  }
}

TEST_CASE("trajectories forget their initial data") {
  const double ell = 1.0;
  const auto cusp = PotentialSpec::cusp(1.0, kAlpha);
  const auto sp = PotentialSpec::spliced(1.0, kAlpha, ell);
  qss::IntegratorConfig cfg;
  cfg.variations = qss::Variations::None;
  cfg.max_step = std::numeric_limits<double>::infinity();
  for (double u0 : {0.1, 1.0, 10.0}) {
    double prev = 1e300;
    for (double tau : {40.0, 400.0, 4000.0, 40000.0}) {
      const double t = tau * sp.time_unit();
      const double xp = qss::extremal_position(cusp, t);
      const double dc = std::abs(state_at(cusp, at_rest(u0 * ell), t, cfg).x / xp - 1.0);
      const double ds = std::abs(state_at(sp, at_rest(u0 * ell), t, cfg).x / xp - 1.0);
      CAPTURE(u0);
      CAPTURE(tau);
      CHECK(dc < prev);
      prev = dc;
      if (tau == 40000.0) {
        CHECK(dc <= 0.01);
        CHECK(ds <= 0.01);
      }
    }
  }
}

TEST_CASE("Richardson toy") {
  CHECK(qss::richardson_toy(0.0, 1.0, 1.0, 0.0) == 0.0);
  CHECK(qss::richardson_toy(0.0, 1.0, 1.0, 1.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(qss::richardson_toy(1e-12, 1.0, 1.0, 1.0) - qss::richardson_toy(0.0, 1.0, 1.0, 1.0) <= 1e-6);
}
