#include "qss/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qss/errors.hpp"

namespace qss {

void WavePacketSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("packet sigma must be positive");
  if (!std::isfinite(mean_x) || !std::isfinite(mean_p)) {
    throw DomainError("packet mean must be finite");
  }
  if (!(hbar_eff >= 0.0)) throw DomainError("hbar_eff must be non-negative");
}

double WavePacketSpec::rho0(double x) const {
  const double z = (x - mean_x) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

double WavePacketSpec::cdf(double x) const {
  return 0.5 * std::erfc(-(x - mean_x) / (sigma * std::numbers::sqrt2));
}

namespace {

constexpr double kJumpOffset = 1e-12;
constexpr double kJumpClear = 1e-6;
constexpr double kMaxSigmas = 14.0;

ClassicalState mirrored(const ClassicalState& s) {
  ClassicalState m = s;
  m.x = -s.x;
  m.v = -s.v;
  m.Jp = -s.Jp;
  m.Kp = -s.Kp;
  return m;
}

// Trapezoid of rho in x. A segment whose ends fall on opposite sides of the
// origin straddles the split, where rho is not interpolable; it is weighted in x0.
double trapezoid_mass(const WkbEnsemble& e) {
  const auto& st = e.states;
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < st.size(); ++i) {
    if (st[i].x < 0.0 && st[i + 1].x > 0.0) {
      mass += 0.5 * (e.rho0[i] + e.rho0[i + 1]) * (e.x0[i + 1] - e.x0[i]);
      continue;
    }
    const double a = e.rho0[i] / st[i].J, b = e.rho0[i + 1] / st[i + 1].J;
    mass += 0.5 * (a + b) * (st[i + 1].x - st[i].x);
  }
  return mass;
}

std::size_t bracket(const WkbEnsemble& ens, double x) {
  auto it = std::upper_bound(ens.states.begin(), ens.states.end(), x,
                             [](double v, const ClassicalState& s) { return v < s.x; });
  std::size_t i = static_cast<std::size_t>(it - ens.states.begin());
  if (i == 0) return 0;
  return std::min(i - 1, ens.states.size() - 2);
}

double require_extremal(const WkbEnsemble& ens, const PotentialSpec& pot) {
  if (pot.kind() == PotentialKind::InvertedOscillator || pot.kind() == PotentialKind::Free) {
    throw DomainError("scaled density needs a cusp-family potential");
  }
  if (!(ens.t > 0.0)) throw DomainError("scaled density needs t > 0");
  return extremal_position(PotentialSpec::cusp(pot.C(), pot.alpha()), ens.t);
}

}  // namespace

std::vector<double> initial_grid(const PotentialSpec& pot, const WavePacketSpec& wp,
                                 GridSpec grid) {
  wp.validate();
  if (grid.n_f <= 0 || grid.n_s >= grid.n_b) throw DomainError("invalid WKB grid");
  const double s = pot.ell() > 0.0 ? pot.ell() : wp.sigma;
  const double peak = wp.rho0(wp.mean_x);
  // coverage: mass missed around the centre and beyond the outermost point
  while (2.0 * peak * s * std::pow(10.0, grid.n_s) > 1e-7) --grid.n_s;
  while (std::erfc(s * std::pow(10.0, grid.n_b) / (wp.sigma * std::numbers::sqrt2)) > 1e-12) {
    ++grid.n_b;
  }
  const double d_max = std::min(s * std::pow(10.0, grid.n_b), kMaxSigmas * wp.sigma);

  // neighbouring points must stay a few ulps of the mean apart
  const double d_min = 32.0 * std::numeric_limits<double>::epsilon() * std::abs(wp.mean_x) /
                       (std::pow(10.0, 1.0 / grid.n_f) - 1.0);
  std::vector<double> offsets;
  for (int i = grid.n_s * grid.n_f; i <= grid.n_b * grid.n_f; ++i) {
    const double d = s * std::pow(10.0, static_cast<double>(i) / grid.n_f);
    if (d < d_min) continue;
    if (d > d_max) break;
    offsets.push_back(d);
  }

  std::vector<double> x0;
  // x0 = 0 of a symmetric packet sits on the unstable fixed point, where J
  // grows without bound
  const bool with_centre =
      !wp.symmetric() && !(pot.kind() == PotentialKind::Cusp && wp.mean_x == 0.0);
  if (with_centre) x0.push_back(wp.mean_x);
  for (double d : offsets) {
    x0.push_back(wp.mean_x + d);
    if (!wp.symmetric()) x0.push_back(wp.mean_x - d);
  }
  if (!wp.symmetric() && pot.kind() != PotentialKind::Free) {
    // the unstable point x = 0 separates the two branches
    const double lo = wp.mean_x - offsets.back(), hi = wp.mean_x + offsets.back();
    for (int i = grid.n_s * grid.n_f; i <= grid.n_b * grid.n_f; ++i) {
      const double d = s * std::pow(10.0, static_cast<double>(i) / grid.n_f);
      if (d > lo && d < hi) x0.push_back(d);
      if (-d > lo && -d < hi) x0.push_back(-d);
    }
  }
  if (pot.kind() == PotentialKind::Spliced) {
    const double lo = wp.symmetric() ? 0.0 : wp.mean_x - offsets.back();
    const double hi = wp.mean_x + offsets.back();
    for (double c : {pot.ell(), -pot.ell()}) {
      if (c > lo && c < hi) {
        std::erase_if(x0, [&](double x) { return std::abs(x - c) < kJumpClear * pot.ell(); });
        x0.push_back(c * (1.0 - kJumpOffset));
        x0.push_back(c * (1.0 + kJumpOffset));
      }
    }
  }
  if (pot.kind() == PotentialKind::Cusp) {
    std::erase(x0, 0.0);
  }
  std::sort(x0.begin(), x0.end());
  x0.erase(std::unique(x0.begin(), x0.end()), x0.end());
  return x0;
}

namespace {

// Integrates in units of (L, T) so that the absolute tolerance means the same
// thing for any ell or sigma.
struct Units {
  double L, T;
};

Units natural_units(const PotentialSpec& pot, const WavePacketSpec& wp) {
  const double L = pot.ell() > 0.0 ? pot.ell() : wp.sigma;
  switch (pot.kind()) {
    case PotentialKind::Kummer:
    case PotentialKind::Spliced: return {L, pot.time_unit()};
    case PotentialKind::Cusp: return {L, std::sqrt(std::pow(L, 1.0 - pot.alpha()) / pot.C())};
    case PotentialKind::InvertedOscillator: return {L, pot.time_unit()};
    case PotentialKind::Free: break;
  }
  return {L, 1.0};
}

std::vector<WkbEnsemble> build_unscaled(const PotentialSpec& pot, const WavePacketSpec& wp,
                                        const std::vector<double>& times, GridSpec grid,
                                        IntegratorConfig cfg) {
  const std::vector<double> x0 = initial_grid(pot, wp, grid);
  const std::size_t nt = times.size();

  // per time: states for each integrated x0
  std::vector<std::vector<ClassicalState>> at(nt, std::vector<ClassicalState>(x0.size()));
  std::vector<double> positive_times;
  for (double t : times) {
    if (t > 0.0 && (positive_times.empty() || t > positive_times.back())) positive_times.push_back(t);
  }
  for (std::size_t j = 0; j < x0.size(); ++j) {
    ClassicalState s0;
    s0.x = x0[j];
    s0.v = wp.mean_p;
    s0.S = wp.mean_p * x0[j];
    std::vector<ClassicalState> samples;
    if (!positive_times.empty()) {
      EvolveOptions opts;
      opts.record_steps = false;
      opts.sample_times = positive_times;
      opts.on_sample = [&](const ClassicalState& s) { samples.push_back(s); };
      // trajectories from near the origin stay tiny for a long time
      IntegratorConfig local = cfg;
      local.abs_tol *= std::clamp(std::abs(x0[j]), 1e-12, 1.0);
      evolve_with(pot, s0, positive_times.back(), local, opts);
    }
    for (std::size_t k = 0; k < nt; ++k) {
      if (times[k] == 0.0) {
        at[k][j] = s0;
      } else {
        const auto pos = std::lower_bound(positive_times.begin(), positive_times.end(), times[k]);
        at[k][j] = samples[static_cast<std::size_t>(pos - positive_times.begin())];
      }
    }
  }

  // The pair straddling |x0| = ell is 2e-12 ell apart, far below the integration
  // error, so its images can swap. The outer point takes x and v from the inner
  // one by a first-order step in x0 (J and K are continuous across ell).
  if (pot.kind() == PotentialKind::Spliced) {
    for (double c : {pot.ell(), -pot.ell()}) {
      const auto in = std::find(x0.begin(), x0.end(), c * (1.0 - kJumpOffset));
      const auto outer = std::find(x0.begin(), x0.end(), c * (1.0 + kJumpOffset));
      if (in == x0.end() || outer == x0.end()) continue;
      const auto a = static_cast<std::size_t>(in - x0.begin());
      const auto b = static_cast<std::size_t>(outer - x0.begin());
      const double dx0 = x0[b] - x0[a];
      for (std::size_t k = 0; k < nt; ++k) {
        if (times[k] == 0.0) continue;
        at[k][b].x = at[k][a].x + at[k][a].J * dx0;
        at[k][b].v = at[k][a].v + at[k][a].K * dx0;
      }
    }
  }

  std::vector<WkbEnsemble> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    WkbEnsemble& e = out[k];
    e.t = times[k];
    e.packet = wp;
    if (wp.symmetric()) {
      for (std::size_t j = x0.size(); j-- > 0;) {
        if (x0[j] == 0.0) continue;
        e.x0.push_back(-x0[j]);
        e.states.push_back(mirrored(at[k][j]));
      }
    }
    for (std::size_t j = 0; j < x0.size(); ++j) {
      e.x0.push_back(x0[j]);
      e.states.push_back(at[k][j]);
    }
  }
  return out;
}

}  // namespace

std::vector<WkbEnsemble> build_ensembles(const PotentialSpec& pot, const WavePacketSpec& wp,
                                         const std::vector<double>& times, GridSpec grid,
                                         IntegratorConfig cfg) {
  wp.validate();
  cfg.validate();
  if (times.empty()) return {};
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0) {
    throw DomainError("ensemble times must be sorted and non-negative");
  }
  cfg.variations = Variations::First;

  const auto [L, T] = natural_units(pot, wp);
  const double alpha = pot.kind() == PotentialKind::Free ? 0.0 : pot.alpha();
  const PotentialSpec unit_pot =
      pot.kind() == PotentialKind::Free
          ? pot
          : PotentialSpec::make(pot.kind(), pot.C() * T * T * std::pow(L, alpha - 1.0),
                                pot.alpha(), pot.ell() / L);
  WavePacketSpec unit_wp = wp;
  unit_wp.sigma = wp.sigma / L;
  unit_wp.mean_x = wp.mean_x / L;
  unit_wp.mean_p = wp.mean_p * T / L;
  std::vector<double> unit_times;
  for (double t : times) unit_times.push_back(t / T);
  if (!std::isnan(cfg.max_step)) cfg.max_step /= T;

  auto out = build_unscaled(unit_pot, unit_wp, unit_times, grid, cfg);
  for (std::size_t k = 0; k < out.size(); ++k) {
    WkbEnsemble& e = out[k];
    e.t = times[k];
    e.packet = wp;
    for (double& x : e.x0) x *= L;
    for (auto& s : e.states) {
      s.x *= L;
      s.v *= L / T;
      s.K /= T;
      s.Jp /= L;
      s.Kp /= L * T;
      s.S *= L * L / T;
      s.t = e.t;
    }
    finish_ensemble(e);
  }
  return out;
}

void finish_ensemble(WkbEnsemble& e) {
  e.rho0.clear();
  for (double x : e.x0) e.rho0.push_back(e.packet.rho0(x));
  for (std::size_t i = 0; i + 1 < e.states.size(); ++i) {
    if (!(e.states[i + 1].x > e.states[i].x)) {
      throw ResolutionError("characteristics lost their order at t = " + std::to_string(e.t));
    }
  }
  e.mass = trapezoid_mass(e);
  if (!(e.mass >= 0.99 && e.mass <= 1.01)) {
    throw ResolutionError("transported mass " + std::to_string(e.mass) + " at t = " +
                          std::to_string(e.t) + " is outside [0.99, 1.01]");
  }
}

WkbEnsemble build_ensemble(const PotentialSpec& pot, const WavePacketSpec& wp, double t,
                           GridSpec grid, IntegratorConfig cfg) {
  return std::move(build_ensembles(pot, wp, {t}, grid, cfg).front());
}

double preimage(const WkbEnsemble& ens, double x) {
  const auto& st = ens.states;
  if (x < st.front().x) return -std::numeric_limits<double>::infinity();
  if (x > st.back().x) return std::numeric_limits<double>::infinity();
  const std::size_t i = bracket(ens, x);
  const double xa = st[i].x, xb = st[i + 1].x;
  const double h = ens.x0[i + 1] - ens.x0[i];
  const double ma = st[i].J * h, mb = st[i + 1].J * h;
  // cubic Hermite x(s) on s in [0, 1]
  auto p = [&](double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * xa + (s3 - 2 * s2 + s) * ma + (-2 * s3 + 3 * s2) * xb +
           (s3 - s2) * mb;
  };
  auto dp = [&](double s) {
    const double s2 = s * s;
    return (6 * s2 - 6 * s) * xa + (3 * s2 - 4 * s + 1) * ma + (-6 * s2 + 6 * s) * xb +
           (3 * s2 - 2 * s) * mb;
  };
  double lo = 0.0, hi = 1.0;
  double s = (x - xa) / (xb - xa);
  for (int it = 0; it < 100; ++it) {
    const double f = p(s) - x;
    if (f == 0.0) break;
    if (f < 0.0) lo = s;
    else hi = s;
    double next = s - f / dp(s);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) < 1e-16) {
      s = next;
      break;
    }
    s = next;
  }
  return ens.x0[i] + s * h;
}

double density_at(const WkbEnsemble& ens, double x) {
  const auto& st = ens.states;
  if (!(x >= st.front().x && x <= st.back().x)) {
    throw OutOfRange("x = " + std::to_string(x) + " is outside the transported range");
  }
  const std::size_t i = bracket(ens, x);
  if (x == st[i].x) return ens.rho0[i] / st[i].J;
  if (x == st[i + 1].x) return ens.rho0[i + 1] / st[i + 1].J;
  const double x0 = preimage(ens, x);
  const double a = ens.x0[i], b = ens.x0[i + 1];
  double logJ;
  if (a * b > 0.0) {
    const double w = std::log(std::abs(x0 / a)) / std::log(b / a);
    logJ = (1.0 - w) * std::log(st[i].J) + w * std::log(st[i + 1].J);
  } else {
    const double w = (x0 - a) / (b - a);
    logJ = (1.0 - w) * std::log(st[i].J) + w * std::log(st[i + 1].J);
  }
  return ens.packet.rho0(x0) / std::exp(logJ);
}

double interval_mass(const WkbEnsemble& ens, double a, double b) {
  if (b < a) std::swap(a, b);
  return ens.packet.cdf(preimage(ens, b)) - ens.packet.cdf(preimage(ens, a));
}

std::pair<double, double> left_right_mass(const WkbEnsemble& ens) {
  const double x0 = preimage(ens, 0.0);
  const double left = ens.packet.cdf(x0);
  return {left, 1.0 - left};
}

double dispersion(const WkbEnsemble& ens) {
  // trapezoid in u = log|x0 - m| on each side of the initial mean
  const double m = ens.packet.mean_x;
  double total = 0.0;
  for (int side : {-1, 1}) {
    double prev_u = 0.0, prev_g = 0.0;
    bool have = false;
    for (std::size_t i = 0; i < ens.x0.size(); ++i) {
      const double d = ens.x0[i] - m;
      if (d * side <= 0.0) continue;
      const double u = std::log(std::abs(d));
      const double dx = ens.states[i].x - m;
      const double g = dx * dx * ens.rho0[i] * std::abs(d);
      if (have) total += 0.5 * (g + prev_g) * std::abs(u - prev_u);
      prev_u = u;
      prev_g = g;
      have = true;
    }
  }
  return total;
}

double scaled_density(const WkbEnsemble& ens, const PotentialSpec& pot, double x_hat) {
  const double xp = require_extremal(ens, pot);
  return xp * density_at(ens, x_hat * xp);
}

std::vector<std::pair<double, double>> scaled_density_curve(const WkbEnsemble& ens,
                                                            const PotentialSpec& pot) {
  const double xp = require_extremal(ens, pot);
  std::vector<std::pair<double, double>> out;
  out.reserve(ens.states.size());
  for (std::size_t i = 0; i < ens.states.size(); ++i) {
    out.emplace_back(ens.states[i].x / xp, xp * ens.rho0[i] / ens.states[i].J);
  }
  return out;
}

double scaled_interval_mass(const WkbEnsemble& ens, const PotentialSpec& pot, double a_hat,
                            double b_hat) {
  const double xp = require_extremal(ens, pot);
  return interval_mass(ens, a_hat * xp, b_hat * xp);
}

WkbValidity wkb_validity(const WkbEnsemble& ens, const PotentialSpec& pot) {
  WkbValidity out;
  const double hbar = ens.packet.hbar_eff;
  for (const auto& s : ens.states) {
    const double V = eval_v(pot, s.x);
    const double kinetic = 0.5 * s.v * s.v;
    const double num = 2.0 * std::numbers::pi * hbar * std::abs(s.K) / s.J;
    const double den = std::max({kinetic, std::abs(kinetic + V), std::abs(V)});
    const double ratio = num / den;
    if (!std::isfinite(ratio)) {
      ++out.flagged;
    } else if (ratio > out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_x = s.x;
    }
  }
  return out;
}

}  // namespace qss
