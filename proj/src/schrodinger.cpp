#include "qss/schrodinger.hpp"

#define EIGEN_FFTW_DEFAULT
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <type_traits>

#include "qss/errors.hpp"

namespace qss {

using Eigen::ArrayXcd;
using Eigen::ArrayXd;
using Eigen::Index;
using cplx = std::complex<double>;

int QmGridSpec::resolved_n(double sigma) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
  if (!(d_tilde > 0.0) || !std::isfinite(d_tilde)) throw DomainError("domain must be positive");
  if (n != 0) {
    if (n < 8 || n % 2 != 0) throw DomainError("grid size must be even and at least 8");
    return n;
  }
  const double h = 0.25 * (sigma > 0.0 ? std::min(epsilon, sigma) : epsilon);
  long m = 8;
  while (d_tilde / static_cast<double>(m) > h) {
    m *= 2;
    if (m > (1L << 28)) throw ResolutionError("grid for this epsilon exceeds 2^28 points");
  }
  return static_cast<int>(m);
}

double QmGridSpec::resolved_dt() const {
  if (dt == 0.0) return epsilon / 16.0;
  if (!std::isfinite(dt)) throw DomainError("dt must be finite");
  return dt;
}

ArrayXd WaveField::grid() const {
  ArrayXd g(size());
  for (Index i = 0; i < size(); ++i) g[i] = x(i);
  return g;
}

WaveField init_packet(const QmGridSpec& grid, const PotentialSpec& pot, const WavePacketSpec& wp) {
  if (!(wp.sigma > 0.0)) throw DomainError("packet sigma must be positive");
  const int n = grid.resolved_n(wp.sigma);
  WaveField f;
  f.epsilon = grid.epsilon;
  f.dt = grid.resolved_dt();
  f.dx = grid.d_tilde / n;
  f.psi.resize(n);
  f.pot_samples.resize(n);
  f.x_min = f.x(0);
  if (wp.sigma < 4.0 * f.dx) throw ResolutionError("sigma is below four grid spacings");
  const double outside = wp.cdf(f.x_min) + 0.5 * std::erfc((f.x(n - 1) - wp.mean_x) /
                                                          (wp.sigma * std::numbers::sqrt2));
  if (outside > 1e-12) throw ResolutionError("packet extends beyond the domain");
  for (Index i = 0; i < n; ++i) {
    const double x = f.x(i);
    const double z = (x - wp.mean_x) / wp.sigma;
    f.psi[i] = std::polar(std::exp(-0.25 * z * z), wp.mean_p * x / f.epsilon);
    f.pot_samples[i] = eval_v(pot, x);
  }
  f.psi /= std::sqrt(f.norm());
  return f;
}

ArrayXd wavenumbers(Index n, double dx) {
  ArrayXd k(n);
  const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  for (Index j = 0; j < n; ++j) k[j] = dk * static_cast<double>(j < n / 2 ? j : j - n);
  return k;
}

struct StrangPropagator::Impl {
  virtual ~Impl() = default;
  virtual void advance(WaveField& f, long steps) = 0;
};

template <typename Real>
struct StrangPropagator::ImplT : StrangPropagator::Impl {
  using C = std::complex<Real>;
  using Arr = Eigen::Array<C, Eigen::Dynamic, 1>;
  Eigen::FFT<Real> fft;
  Arr kin, half_v, full_v, a;

  ImplT(const WaveField& field, double dt) {
    const Index n = field.size();
    const Real eps = field.epsilon;
    fft.SetFlag(Eigen::FFT<Real>::Unscaled);
    const ArrayXd k = wavenumbers(n, field.dx);
    kin.resize(n);
    half_v.resize(n);
    full_v.resize(n);
    const Real inv_n = Real(1) / static_cast<Real>(n);
    for (Index j = 0; j < n; ++j) {
      const Real kj = k[j];
      kin[j] = std::polar(inv_n, Real(-0.5) * eps * kj * kj * Real(dt));
      const Real th = -Real(field.pot_samples[j]) * Real(dt) / eps;
      half_v[j] = std::polar(Real(1), Real(0.5) * th);
      full_v[j] = std::polar(Real(1), th);
    }
  }

  void advance(WaveField& f, long steps) override {
    const Index n = f.size();
    C* x;
    if constexpr (std::is_same_v<Real, double>) {
      x = f.psi.data();
    } else {
      a = f.psi.template cast<C>();
      x = a.data();
    }
    Eigen::Map<Arr> psi(x, n);
    psi *= half_v;
    for (long s = 0; s < steps; ++s) {
      fft.fwd(x, x, n);
      psi *= kin;
      fft.inv(x, x, n);
      psi *= (s + 1 == steps ? half_v : full_v);
    }
    if constexpr (!std::is_same_v<Real, double>) f.psi = a.template cast<cplx>();
  }
};

StrangPropagator::StrangPropagator(const WaveField& field, double dt, FftPrecision precision)
    : dt_(dt) {
  if (precision == FftPrecision::Extended) {
    impl_ = std::make_unique<ImplT<long double>>(field, dt);
  } else {
    impl_ = std::make_unique<ImplT<double>>(field, dt);
  }
}

StrangPropagator::~StrangPropagator() = default;

void StrangPropagator::advance(WaveField& f, long steps) {
  if (steps <= 0) return;
  impl_->advance(f, steps);
  f.t += static_cast<double>(steps) * dt_;
}

void strang_step(WaveField& f) {
  StrangPropagator prop(f, f.dt);
  prop.advance(f, 1);
}

MomentumPdf momentum_pdf(const WaveField& f) {
  const Index n = f.size();
  Eigen::FFT<double> fft;
  ArrayXcd F(n);
  fft.fwd(F.data(), f.psi.data(), n);
  MomentumPdf m;
  const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n) * f.dx);
  m.dp = f.epsilon * dk;
  m.p.resize(n);
  m.rho.resize(n);
  const double scale = f.dx * f.dx / (2.0 * std::numbers::pi * f.epsilon);
  for (Index i = 0; i < n; ++i) {
    const Index j = (i + n / 2) % n;  // ascending wavenumbers
    m.p[i] = m.dp * static_cast<double>(i - n / 2);
    m.rho[i] = scale * std::norm(F[j]);
  }
  return m;
}

QmPeak side_peak(const ArrayXd& x, const ArrayXd& rho, bool right) {
  const Index n = x.size();
  QmPeak pk;
  pk.x = pk.lo = pk.hi = std::numeric_limits<double>::quiet_NaN();
  pk.half_width = std::numeric_limits<double>::quiet_NaN();
  Index best = -1;
  for (Index i = 0; i < n; ++i) {
    if ((right ? x[i] > 0.0 : x[i] < 0.0) && (best < 0 || rho[i] > rho[best])) best = i;
  }
  if (best < 0 || !(rho[best] > 0.0)) return pk;
  pk.x = x[best];
  pk.height = rho[best];
  if (best > 0 && best + 1 < n) {
    const double a = rho[best - 1], b = rho[best], c = rho[best + 1];
    const double den = a - 2.0 * b + c;
    if (den < 0.0) {
      const double s = 0.5 * (a - c) / den;
      const double h = x[best + 1] - x[best];
      pk.x = x[best] + s * h;
      pk.height = b - 0.25 * (a - c) * s;
    }
  }
  const double half = 0.5 * pk.height;
  auto crossing = [&](Index i, Index j) {
    return x[i] + (half - rho[i]) / (rho[j] - rho[i]) * (x[j] - x[i]);
  };
  Index i = best;
  while (i > 0 && rho[i - 1] >= half) --i;
  pk.lo = i > 0 ? crossing(i - 1, i) : x[0];
  i = best;
  while (i + 1 < n && rho[i + 1] >= half) ++i;
  pk.hi = i + 1 < n ? crossing(i, i + 1) : x[n - 1];
  pk.half_width = 0.5 * (pk.hi - pk.lo);
  return pk;
}

QmObservables observables(const WaveField& f) {
  const ArrayXd x = f.grid();
  const ArrayXd rho = f.rho();
  QmObservables o;
  const double mass = rho.sum();
  o.mean_x = (x * rho).sum() / mass;
  o.dx = std::sqrt(((x - o.mean_x).square() * rho).sum() / mass);
  double left = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) left += rho[i];
    else if (x[i] == 0.0) left += 0.5 * rho[i];
  }
  o.p_minus = left / mass;
  o.p_plus = 1.0 - o.p_minus;
  o.x_left = side_peak(x, rho, false);
  o.x_right = side_peak(x, rho, true);

  const MomentumPdf m = momentum_pdf(f);
  const double pmass = m.rho.sum();
  o.mean_p = (m.p * m.rho).sum() / pmass;
  o.dp = std::sqrt(((m.p - o.mean_p).square() * m.rho).sum() / pmass);
  o.p_left = side_peak(m.p, m.rho, false);
  o.p_right = side_peak(m.p, m.rho, true);
  return o;
}

namespace {

QmPeak split_right_peak(const WaveField& f) {
  const QmPeak pk = side_peak(f.grid(), f.rho(), true);
  if (!(pk.lo > 0.0)) throw NotSplit("right peak is not separated from the origin");
  return pk;
}

}  // namespace

PhaseProfile env_phase_profile(const WaveField& f, double width_mult) {
  PhaseProfile prof;
  prof.peak = split_right_peak(f);
  const double a = prof.peak.x - 0.5 * width_mult * prof.peak.half_width;
  const double b = prof.peak.x + 0.5 * width_mult * prof.peak.half_width;
  for (Index i = 0; i < f.size(); ++i) {
    const double x = f.x(i);
    if (x < a || x > b) continue;
    prof.x.push_back(x);
    prof.re_psi2.push_back(f.psi[i].real() * f.psi[i].real());
    prof.rho.push_back(std::norm(f.psi[i]));
  }
  return prof;
}

int decoherence_profile(const WaveField& f) {
  const QmPeak pk = split_right_peak(f);
  int count = 0, last = 0;
  for (Index i = 0; i < f.size(); ++i) {
    const double x = f.x(i);
    if (x < pk.x - pk.half_width || x > pk.x + pk.half_width) continue;
    const double r = f.psi[i].real();
    const int s = (r > 0.0) - (r < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

double edge_mass(const WaveField& f, double frac) {
  const double width = f.dx * static_cast<double>(f.size());
  const double a = f.x(0) + frac * width;
  const double b = f.x(f.size() - 1) - frac * width;
  double m = 0.0;
  for (Index i = 0; i < f.size(); ++i) {
    const double x = f.x(i);
    if (x < a || x > b) m += std::norm(f.psi[i]);
  }
  return m * f.dx;
}

std::vector<QmSnapshot> evolve_qm(WaveField& f, const std::vector<double>& times, bool keep,
                                  FftPrecision precision) {
  std::vector<long> steps;
  double t = f.t;
  for (double target : times) {
    const double q = (target - t) / f.dt;
    const double r = std::round(q);
    if (r < 0.0 || std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) {
      throw DomainError("sample times must be ascending multiples of dt");
    }
    steps.push_back(static_cast<long>(r));
    t = target;
  }
  StrangPropagator prop(f, f.dt, precision);
  std::vector<QmSnapshot> out;
  const double t0 = f.t;
  long done = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    prop.advance(f, steps[i]);
    done += steps[i];
    f.t = t0 + static_cast<double>(done) * f.dt;
    const double edge = edge_mass(f);
    if (edge > 1e-8) {
      throw BoundaryContamination("edge mass " + std::to_string(edge) + " at t = " +
                                  std::to_string(f.t));
    }
    QmSnapshot snap;
    snap.t = f.t;
    snap.obs = observables(f);
    if (keep) {
      snap.field = f;
      snap.momentum = momentum_pdf(f);
    }
    out.push_back(std::move(snap));
  }
  return out;
}

PotentialSpec SemiClassicalCase::potential() const {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0, 1)");
  if (!(mu > 0.0)) throw DomainError("mu must be positive");
  return PotentialSpec::kummer(1.0, alpha, std::pow(epsilon, beta));
}

WavePacketSpec SemiClassicalCase::packet() const {
  WavePacketSpec wp;
  wp.sigma = std::pow(epsilon, beta) / mu;
  wp.hbar_eff = epsilon;
  return wp;
}

QmGridSpec SemiClassicalCase::grid() const {
  QmGridSpec g;
  g.epsilon = epsilon;
  return g;
}

}  // namespace qss
