#include <doctest.h>

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "qss/errors.hpp"
#include "qss/splitting.hpp"

using oracle::rel_err;
using qss::ExtremumKind;
using qss::PotentialSpec;

namespace {

const double kAlpha = 1.0 / 3.0;

qss::IntegratorConfig uncapped() {
  qss::IntegratorConfig cfg;
  cfg.max_step = std::numeric_limits<double>::infinity();
  return cfg;
}

qss::ScanSpec coarse_scan() {
  qss::ScanSpec s;
  s.per_decade = 64;
  return s;
}

// -d log J / d u0 from the closed-form spliced Jacobian, centred differences
double closed_residual(const PotentialSpec& pot, double mu, double u, double tau) {
  const double h = 1e-5 * u;
  const double d = (std::log(qss::spliced_jacobian_closed(pot, u + h, tau)) -
                    std::log(qss::spliced_jacobian_closed(pot, u - h, tau))) /
                   (2.0 * h);
  return -d - mu * mu * u;
}

double closed_max_residual(const PotentialSpec& pot, double mu, double tau, double lo,
                           double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(lo), b = std::log(hi);
  auto f = [&](double lu) { return -closed_residual(pot, mu, std::exp(lu), tau); };
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 80; ++i) {
    if (fc <= fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return -std::min(fc, fd);
}

// root of g on [a, b] with g(a), g(b) of opposite sign
template <typename F>
double bracketed_root(F g, double a, double b) {
  boost::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(g, a, b, boost::math::tools::eps_tolerance<double>(50),
                                             it);
  return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("no extrema off the origin at tau = 0") {
  const auto pot = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  CHECK(qss::extremum_condition(pot, 1.0, 0.0).empty());
  CHECK(qss::jpj_ratio(pot, 0.5, 0.0) == 0.0);
}

TEST_CASE("scan grid") {
  const auto k = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  const auto g = qss::scan_grid(k, {});
  CHECK(g.size() == 7 * 512 + 1);
  CHECK(g.front() == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK(g.back() == doctest::Approx(10.0).epsilon(1e-14));
  const auto s = qss::scan_grid(PotentialSpec::spliced(1.0, kAlpha, 1.0), {}, true);
  CHECK(s.size() > g.size());
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(*std::prev(std::lower_bound(s.begin(), s.end(), 1.0)) >= 1.0 - 1e-15 - 1e-16);
}

TEST_CASE("Kummer small-tau roots follow the cubic normal form") {
  const auto pot = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  const double mu = 0.01;
  const double A = qss::a_alpha(kAlpha);
  const double tau_nf = mu * std::sqrt(2.0 / ((1.0 - kAlpha) * A));
  for (double f : {1.003, 1.01}) {
    const double tau = f * tau_nf;
    const double lin = 0.5 * (1.0 - kAlpha) * A * tau * tau - mu * mu;
    const double cub = 0.25 * (1.0 - kAlpha) * (1.0 - kAlpha / 3.0) * A * tau * tau;
    const double u_nf = std::sqrt(lin / cub);
    const auto roots = qss::extremum_condition(pot, mu, tau);
    REQUIRE(roots.size() == 1);
    CHECK(roots[0].kind == ExtremumKind::Max);
    CHECK(rel_err(roots[0].u0, u_nf) <= 0.01);
  }
  CHECK(qss::extremum_condition(pot, mu, 0.99 * tau_nf).empty());
}

TEST_CASE("spliced long-time roots approach those of the limiting -J'/J") {
  const auto pot = PotentialSpec::spliced(1.0, kAlpha, 1.0);
  const double mu = 5.0;
  auto g = [&](double u) { return qss::jpj_infinity(kAlpha, u) - mu * mu * u; };
  const double u_small = bracketed_root(g, 0.5 / mu, 2.0 / mu);
  const double c = qss::jpj_singular_coefficient(kAlpha);
  const double guess = 1.0 - c * c / (2.0 * std::pow(mu, 4));
  const double u_large = bracketed_root(g, 1.0 - 4.0 * (1.0 - guess), 1.0 - 0.25 * (1.0 - guess));
  CHECK(std::abs(u_small - 1.0 / mu) < 0.02);

  const auto roots = qss::extremum_condition(pot, mu, 200.0, {}, uncapped());
  REQUIRE(roots.size() == 2);
  CHECK(roots[0].kind == ExtremumKind::Max);
  CHECK(roots[1].kind == ExtremumKind::Min);
  CHECK(rel_err(roots[0].u0, u_small) <= 0.01);
  CHECK(rel_err(1.0 - roots[1].u0, 1.0 - u_large) <= 0.01);
}

TEST_CASE("spliced: no roots between the two long-time solutions") {
  const auto pot = PotentialSpec::spliced(1.0, kAlpha, 1.0);
  const double mu = 20.0;
  for (double tau : {4.0, 6.0, 10.0, 40.0}) {
    for (const auto& r : qss::extremum_condition(pot, mu, tau, coarse_scan(), uncapped())) {
      CHECK((r.u0 < 2.0 / mu || r.u0 > 0.999));
    }
  }
}

TEST_CASE("Kummer splitting at small mu") {
  const auto pot = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  const double mu = 0.01;
  const auto r = qss::splitting_time(pot, mu);
  const double law = std::sqrt(2.0 / ((1.0 - kAlpha) * qss::a_alpha(kAlpha)));
  CHECK(r.bifurcation_kind == qss::BifurcationKind::Pitchfork);
  CHECK(std::abs(r.tau_c / mu / law - 1.0) <= 0.03);
  CHECK(std::abs(r.tau_c / mu / law - 1.0) <= 1e-3);
}

TEST_CASE("spliced splitting time matches the closed-form Jacobian") {
  const auto pot = PotentialSpec::spliced(1.0, kAlpha, 1.0);
  for (double mu : {2.0, 10.0}) {
    const auto r = qss::splitting_time(pot, mu);
    CHECK(r.bifurcation_kind == qss::BifurcationKind::SaddleNode);
    const double lo = r.u0_c / 2.0, hi = std::min(2.0 * r.u0_c, 0.9);
    CHECK(closed_max_residual(pot, mu, r.tau_c * (1.0 - 1e-4), lo, hi) < 0.0);
    CHECK(closed_max_residual(pot, mu, r.tau_c * (1.0 + 1e-4), lo, hi) > 0.0);
  }
}

TEST_CASE("spliced splitting time is bounded by arccosh(mu) and tracks it") {
  const auto pot = PotentialSpec::spliced(1.0, kAlpha, 1.0);
  double prev_ratio = std::numeric_limits<double>::infinity();
  for (double mu : {2.0, 10.0, 100.0, 1000.0}) {
    const auto r = qss::splitting_time(pot, mu);
    const double bound = std::acosh(mu);
    CHECK(r.tau_c >= bound);
    const double ratio = r.tau_c / bound;
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
  CHECK(prev_ratio < 1.2);
}

TEST_CASE("splitting time is non-decreasing in mu") {
  for (auto kind : {qss::PotentialKind::Kummer, qss::PotentialKind::Spliced}) {
    const auto pot = PotentialSpec::make(kind, 1.0, kAlpha, 1.0);
    double prev = 0.0;
    for (double mu : {0.05, 0.3, 1.5, 3.0, 10.0, 30.0}) {
      if (kind == qss::PotentialKind::Spliced && mu < 1.5) continue;
      const double tau = qss::splitting_time(pot, mu, coarse_scan()).tau_c;
      CHECK(tau >= prev);
      prev = tau;
    }
  }
}

TEST_CASE("splitting time collapses onto the inner time scale") {
  const double mu = 1.0;
  const auto a = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  const auto b = PotentialSpec::kummer(2.5, kAlpha, 0.3);
  const auto ra = qss::splitting_time(a, mu, coarse_scan());
  const auto rb = qss::splitting_time(b, mu, coarse_scan());
  CHECK(rel_err(ra.tau_c, rb.tau_c) <= 1e-6);
  CHECK(rel_err(rb.t_c, rb.tau_c * b.time_unit()) <= 1e-12);
}

TEST_CASE("Kummer bifurcation diagram is a pitchfork") {
  const auto pot = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  const double mu = 1.0;
  const double tau_c = qss::splitting_time(pot, mu, coarse_scan()).tau_c;
  const auto pts = qss::bifurcation_diagram(pot, mu, 2.0 * tau_c, 20, coarse_scan());
  for (const auto& p : pts) {
    if (p.tau < 0.97 * tau_c) {
      CHECK(p.u0 == 0.0);
      CHECK(p.kind == ExtremumKind::Max);
    } else if (p.tau > 1.03 * tau_c) {
      if (p.u0 == 0.0) CHECK(p.kind == ExtremumKind::Min);
      else CHECK(p.kind == ExtremumKind::Max);
    }
  }
  int late = 0;
  for (const auto& p : pts) late += p.tau > 1.03 * tau_c && p.u0 > 0.0;
  CHECK(late > 0);
}

TEST_CASE("spliced bifurcation diagram keeps the origin maximum") {
  const auto pot = PotentialSpec::spliced(1.0, kAlpha, 1.0);
  const double mu = 1.0;
  const auto pts = qss::bifurcation_diagram(pot, mu, 6.0, 12, coarse_scan());
  int off_max = 0, off_min = 0;
  for (const auto& p : pts) {
    if (p.u0 == 0.0) CHECK(p.kind == ExtremumKind::Max);
    if (p.u0 > 0.0 && p.kind == ExtremumKind::Max) ++off_max;
    if (p.u0 > 0.0 && p.kind == ExtremumKind::Min) ++off_min;
  }
  CHECK(off_max > 0);
  CHECK(off_min == off_max);
  CHECK_THROWS_AS(qss::splitting_time(pot, mu, coarse_scan()), qss::NoSplitWithinHorizon);
}

TEST_CASE("splitting errors") {
  const auto k = PotentialSpec::kummer(1.0, kAlpha, 1.0);
  CHECK_THROWS_AS(qss::splitting_time(PotentialSpec::cusp(1.0, kAlpha), 1.0), qss::DomainError);
  CHECK_THROWS_AS(qss::splitting_time(k, 1e-4), qss::DomainError);
  CHECK_THROWS_AS(qss::splitting_time(k, 2e3), qss::DomainError);
  CHECK_THROWS_AS(qss::splitting_time(k, 1.0, coarse_scan(), {}, 0.5), qss::NoSplitWithinHorizon);
  CHECK(qss::default_tau_max(0.5) == 50.0);
  CHECK(qss::default_tau_max(10.0) == doctest::Approx(50.0 + 2.0 * std::acosh(10.0)));
}
