#include <doctest.h>

#include <cmath>
#include <vector>

#include "qss/classical.hpp"
#include "qss/schrodinger.hpp"

// Semiclassical sweep at t = 6, beta = 1/2, mu = 1. The eps = 2^-10 run takes
// hours and is only compiled into the slow tier.

namespace {

struct Deviations {
  double eps;
  double x_peak, p_peak, dx, dp;
  double p_minus, p_plus;
};

Deviations measure(int n) {
  const double t = 6.0;
  qss::SemiClassicalCase c;
  c.epsilon = std::pow(2.0, -n);
  auto f = qss::init_packet(c.grid(), c.potential(), c.packet());
  const auto o = qss::evolve_qm(f, {t}, false)[0].obs;
  const auto cusp = qss::PotentialSpec::cusp(1.0, c.alpha);
  const double xp = qss::extremal_position(cusp, t), vp = qss::extremal_velocity(cusp, t);
  MESSAGE("eps = 2^-" << n << ": x peaks " << o.x_left.x << ", " << o.x_right.x << " (x_+ " << xp
                      << "), p peaks " << o.p_left.x << ", " << o.p_right.x << " (v_+ " << vp
                      << "), dx " << o.dx << ", dp " << o.dp);
  const double x_peak = std::max(std::abs(o.x_right.x - xp), std::abs(o.x_left.x + xp));
  const double p_peak = std::max(std::abs(o.p_right.x - vp), std::abs(o.p_left.x + vp));
  // two branches at +-x_+ with weight 1/2 each: dx = x_+, dp = v_+
  return {c.epsilon, x_peak, p_peak, std::abs(o.dx - xp), std::abs(o.dp - vp), o.p_minus,
          o.p_plus};
}

}  // namespace

TEST_CASE("quantum QSS trend") {
  std::vector<int> ns = {1, 6, 8};
#ifdef QSS_SLOW_TESTS
  ns.push_back(10);
#endif
  std::vector<Deviations> d;
  for (int n : ns) d.push_back(measure(n));
  for (std::size_t i = 1; i < d.size(); ++i) {
    CHECK(d[i].x_peak < d[i - 1].x_peak);
    CHECK(d[i].p_peak < d[i - 1].p_peak);
    CHECK(d[i].dx < d[i - 1].dx);
    CHECK(d[i].dp < d[i - 1].dp);
  }
  for (const auto& e : d) {
    if (e.eps > std::pow(2.0, -8) * 1.0000001) continue;
    CHECK(std::abs(e.p_minus - 0.5) <= 0.02);
    CHECK(std::abs(e.p_plus - 0.5) <= 0.02);
  }
}
