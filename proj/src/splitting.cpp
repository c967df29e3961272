#include "qss/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qss/errors.hpp"

namespace qss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_splitting_potential(const PotentialSpec& pot) {
  if (pot.kind() != PotentialKind::Kummer && pot.kind() != PotentialKind::Spliced) {
    throw DomainError("splitting needs the Kummer or spliced potential");
  }
}

ClassicalState at_rest(const PotentialSpec& pot, double u0) {
  ClassicalState s;
  s.x = u0 * pot.ell();
  return s;
}

double residual(const PotentialSpec& pot, const ClassicalState& s, double mu, double u0) {
  return -pot.ell() * s.Jp / s.J - mu * mu * u0;
}

bool straddles_splice(const PotentialSpec& pot, double a, double b) {
  return pot.kind() == PotentialKind::Spliced && a < 1.0 && b >= 1.0;
}

ExtremumKind kind_of_crossing(double left) { return left > 0.0 ? ExtremumKind::Max : ExtremumKind::Min; }

// Interior local minima of tau*(u0), plus the lower scan edge. A minimum at
// the last point below the spliced kink that is still descending is the
// kink's own region growing, not a new smooth maximum.
std::vector<std::size_t> birth_points(const PotentialSpec& pot, const std::vector<double>& u,
                                      const std::vector<double>& ts) {
  std::vector<std::size_t> out;
  const std::size_t n = u.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!std::isfinite(ts[i])) continue;
    const double left = i > 0 ? ts[i - 1] : kInf;
    const double right = ts[i + 1];
    if (!(ts[i] <= left && ts[i] <= right)) continue;
    if (straddles_splice(pot, u[i], u[i + 1]) && ts[i] < left) continue;
    out.push_back(i);
  }
  return out;
}

std::size_t earliest(const std::vector<std::size_t>& idx, const std::vector<double>& ts) {
  return *std::min_element(idx.begin(), idx.end(),
                           [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
}

}  // namespace

std::vector<double> scan_grid(const PotentialSpec& pot, const ScanSpec& scan, bool near_splice) {
  if (scan.per_decade <= 0 || !(scan.u_min > 0.0) || !(scan.u_max > scan.u_min)) {
    throw DomainError("invalid u0 scan");
  }
  const int pd = scan.per_decade;
  std::vector<double> u;
  const int lo = static_cast<int>(std::ceil(std::log10(scan.u_min) * pd - 1e-9));
  const int hi = static_cast<int>(std::floor(std::log10(scan.u_max) * pd + 1e-9));
  for (int i = lo; i <= hi; ++i) u.push_back(std::pow(10.0, static_cast<double>(i) / pd));
  if (near_splice && pot.kind() == PotentialKind::Spliced && scan.u_max >= 1.0) {
    const int q = std::max(1, pd / 8);
    for (int j = 2 * q; j <= 15 * q; ++j) {
      const double u0 = 1.0 - std::pow(10.0, -static_cast<double>(j) / q);
      if (u0 > scan.u_min) u.push_back(u0);
    }
  }
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

double jpj_ratio(const PotentialSpec& pot, double u0, double tau, IntegratorConfig cfg) {
  require_splitting_potential(pot);
  if (!(tau >= 0.0)) throw DomainError("tau must be non-negative");
  cfg.variations = Variations::Second;
  EvolveOptions opts;
  opts.record_steps = false;
  const auto s = evolve_with(pot, at_rest(pot, u0), tau * pot.time_unit(), cfg, opts).final_state;
  return -pot.ell() * s.Jp / s.J;
}

double crossing_time(const PotentialSpec& pot, double mu, double u0, double tau_max,
                     IntegratorConfig cfg) {
  require_splitting_potential(pot);
  cfg.variations = Variations::Second;
  EvolveOptions opts;
  opts.record_steps = false;
  opts.event = [&](const ClassicalState& s) { return residual(pot, s, mu, u0); };
  const double T = pot.time_unit();
  const auto res = evolve_with(pot, at_rest(pot, u0), tau_max * T, cfg, opts);
  return res.event_state ? res.event_state->t / T : kInf;
}

std::vector<BranchPoint> extremum_condition(const PotentialSpec& pot, double mu, double tau,
                                            const ScanSpec& scan, IntegratorConfig cfg) {
  require_splitting_potential(pot);
  if (!(tau >= 0.0) || !(mu > 0.0)) throw DomainError("extremum condition needs tau >= 0, mu > 0");
  std::vector<BranchPoint> roots;
  if (tau == 0.0) return roots;
  const auto u = scan_grid(pot, scan, true);
  auto R = [&](double u0) { return jpj_ratio(pot, u0, tau, cfg) - mu * mu * u0; };
  std::vector<double> r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) r[i] = R(u[i]);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    if ((r[i] >= 0.0) == (r[i + 1] >= 0.0)) continue;
    if (straddles_splice(pot, u[i], u[i + 1])) continue;
    double a = u[i], b = u[i + 1];
    const bool left_positive = r[i] >= 0.0;
    while (b - a > 1e-13 * b) {
      const double m = std::sqrt(a * b);
      if (m <= a || m >= b) break;
      if ((R(m) >= 0.0) == left_positive) a = m;
      else b = m;
    }
    roots.push_back({tau, std::sqrt(a * b), kind_of_crossing(r[i])});
  }
  return roots;
}

double default_tau_max(double mu) { return 50.0 + 2.0 * std::acosh(std::max(mu, 1.0)); }

SplitResult splitting_time(const PotentialSpec& pot, double mu, const ScanSpec& scan,
                           IntegratorConfig cfg, double tau_max) {
  require_splitting_potential(pot);
  if (!(mu >= 1e-3 && mu <= 1e3)) throw DomainError("splitting time needs mu in [1e-3, 1e3]");
  if (std::isnan(tau_max)) tau_max = default_tau_max(mu);
  if (!(tau_max > 0.0)) throw DomainError("tau_max must be positive");

  const auto u = scan_grid(pot, scan);
  const std::size_t n = u.size();
  std::vector<double> ts(n, kInf);
  std::vector<bool> done(n, false);

  // coarse pass for an upper bound, then the full grid below that bound
  const std::size_t stride = static_cast<std::size_t>(std::max(1, scan.per_decade / 16));
  std::vector<double> cu, cts;
  for (std::size_t i = 0; i < n; i += stride) {
    ts[i] = crossing_time(pot, mu, u[i], tau_max, cfg);
    done[i] = true;
    cu.push_back(u[i]);
    cts.push_back(ts[i]);
  }
  double bound = tau_max;
  if (const auto coarse = birth_points(pot, cu, cts); !coarse.empty()) {
    bound = std::min(tau_max, cts[earliest(coarse, cts)]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!done[i]) ts[i] = crossing_time(pot, mu, u[i], bound, cfg);
  }

  const auto births = birth_points(pot, u, ts);
  if (births.empty()) {
    throw NoSplitWithinHorizon("no maximum away from the origin before tau = " +
                               std::to_string(tau_max));
  }
  std::size_t i = earliest(births, ts);
  // tau*(u0) is flat to O(u0^2) near the origin; a minimum that close to the
  // edge value is the pitchfork at u0 = 0
  if (std::isfinite(ts[0]) && ts[0] <= ts[i] * (1.0 + 1e-8)) i = 0;

  SplitResult out;
  out.mu = mu;
  out.tau_c = ts[i];
  out.u0_c = u[i];
  out.bifurcation_kind = i == 0 ? BifurcationKind::Pitchfork : BifurcationKind::SaddleNode;
  if (i > 0) {
    // golden section in log u0 on the bracketing neighbours
    const double cap = std::min(tau_max, std::max(ts[i - 1], ts[i + 1]));
    auto f = [&](double lu) { return crossing_time(pot, mu, std::exp(lu), cap, cfg); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(u[i - 1]), b = std::log(u[i + 1]);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-10) {
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
    const double lu = fc <= fd ? c : d;
    const double tmin = std::min(fc, fd);
    if (tmin < out.tau_c) {
      out.tau_c = tmin;
      out.u0_c = std::exp(lu);
    }
  }
  out.t_c = out.tau_c * pot.time_unit();
  if (out.bifurcation_kind == BifurcationKind::Pitchfork) {
    out.branch_points = {{out.tau_c, 0.0, ExtremumKind::Min}, {out.tau_c, out.u0_c, ExtremumKind::Max}};
  } else {
    out.branch_points = {{out.tau_c, 0.0, ExtremumKind::Max},
                         {out.tau_c, out.u0_c, ExtremumKind::Max},
                         {out.tau_c, out.u0_c, ExtremumKind::Min}};
  }
  return out;
}

std::vector<BranchPoint> bifurcation_diagram(const PotentialSpec& pot, double mu, double tau_max,
                                             int n_tau, const ScanSpec& scan,
                                             IntegratorConfig cfg) {
  require_splitting_potential(pot);
  if (!(mu > 0.0) || !(tau_max > 0.0) || n_tau <= 0) {
    throw DomainError("bifurcation diagram needs mu > 0, tau_max > 0, n_tau > 0");
  }
  cfg.variations = Variations::Second;
  const double T = pot.time_unit();
  const auto u = scan_grid(pot, scan, true);
  std::vector<double> times;
  for (int k = 1; k <= n_tau; ++k) times.push_back(tau_max * T * k / n_tau);

  // r[k][i]: residual at time k and scan point i
  std::vector<std::vector<double>> r(times.size(), std::vector<double>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::size_t k = 0;
    EvolveOptions opts;
    opts.record_steps = false;
    opts.sample_times = times;
    opts.on_sample = [&](const ClassicalState& s) { r[k++][i] = residual(pot, s, mu, u[i]); };
    evolve_with(pot, at_rest(pot, u[i]), times.back(), cfg, opts);
  }

  std::vector<BranchPoint> out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double tau = times[k] / T;
    const auto& rk = r[k];
    // the spliced J is flat in x0 for u0 < 1/cosh(tau), so the origin stays a maximum
    const bool origin_max = pot.kind() == PotentialKind::Spliced || rk.front() < 0.0;
    out.push_back({tau, 0.0, origin_max ? ExtremumKind::Max : ExtremumKind::Min});
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
      if ((rk[i] >= 0.0) == (rk[i + 1] >= 0.0)) continue;
      if (straddles_splice(pot, u[i], u[i + 1])) {
        // corner of the density at x_t(ell)
        out.push_back({tau, 1.0, kind_of_crossing(rk[i])});
        continue;
      }
      const double w = rk[i] / (rk[i] - rk[i + 1]);
      out.push_back({tau, u[i] + w * (u[i + 1] - u[i]), kind_of_crossing(rk[i])});
    }
  }
  return out;
}

}  // namespace qss
