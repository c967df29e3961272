#pragma once

// Dimensionless Schrodinger equation
//   i eps dpsi/dt = -(eps^2/2) psi'' + V(x) psi
// on the periodic grid [-D/2, D/2), solved by Strang splitting with the
// kinetic step done in Fourier space.

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "qss/potentials.hpp"
#include "qss/wkb.hpp"

namespace qss {

struct QmGridSpec {
  double epsilon = 1.0;
  double d_tilde = 128.0 * 3.14159265358979323846;
  int n = 0;         // 0: smallest power of two with dx <= min(eps, sigma)/4
  double dt = 0.0;   // 0: eps/16

  int resolved_n(double sigma = 0.0) const;
  double resolved_dt() const;
};

struct WaveField {
  Eigen::ArrayXcd psi;
  Eigen::ArrayXd pot_samples;
  double epsilon = 1.0;
  double dt = 0.0;
  double t = 0.0;
  double x_min = 0.0;
  double dx = 0.0;

  Eigen::Index size() const { return psi.size(); }
  /// (i - n/2) dx, so the grid is exactly symmetric about x = 0.
  double x(Eigen::Index i) const { return static_cast<double>(i - size() / 2) * dx; }
  Eigen::ArrayXd grid() const;
  Eigen::ArrayXd rho() const { return psi.abs2(); }
  double norm() const { return psi.abs2().sum() * dx; }
};

/// Samples the potential and the packet psi0 = (2 pi sigma^2)^(-1/4)
/// exp(-(x-<x>)^2/(4 sigma^2) + i <p> x / eps), normalised on the grid.
/// wp.hbar_eff is ignored; eps comes from the grid. Throws ResolutionError if
/// sigma < 4 dx or more than 1e-12 of the packet lies outside the domain.
WaveField init_packet(const QmGridSpec& grid, const PotentialSpec& pot, const WavePacketSpec& wp);

/// Arithmetic of the Fourier transforms. Double-precision FFTs gain about one
/// ulp of norm per step (rounded butterfly constants); Extended runs them in
/// long double, roughly ten times slower, and holds the norm to ~1e-14 over
/// 1e5 steps. psi is stored in double either way.
enum class FftPrecision { Double, Extended };

/// Repeated Strang steps with cached transforms and phase factors. Consecutive
/// potential half-steps are merged, so n steps cost n forward/inverse pairs.
class StrangPropagator {
 public:
  /// Phases for field.pot_samples, field.epsilon and step dt (dt < 0 runs backwards).
  StrangPropagator(const WaveField& field, double dt,
                   FftPrecision precision = FftPrecision::Double);
  ~StrangPropagator();
  StrangPropagator(const StrangPropagator&) = delete;
  StrangPropagator& operator=(const StrangPropagator&) = delete;

  void advance(WaveField& f, long steps);
  double dt() const { return dt_; }

 private:
  struct Impl;
  template <typename Real>
  struct ImplT;
  std::unique_ptr<Impl> impl_;
  double dt_;
};

/// One step of size f.dt: exp(-iV dt/2eps), exp(-i eps k^2 dt/2) in Fourier space, exp(-iV dt/2eps).
void strang_step(WaveField& f);

/// Wavenumbers of the periodic grid in FFT order.
Eigen::ArrayXd wavenumbers(Eigen::Index n, double dx);

struct MomentumPdf {
  Eigen::ArrayXd p;    // ascending, p = eps k
  Eigen::ArrayXd rho;  // |psi_hat(p)|^2, integrates to 1 in p
  double dp = 0.0;
};

/// psi_hat(p) = (2 pi eps)^(-1/2) int psi e^(-i x p / eps) dx on the FFT grid.
MomentumPdf momentum_pdf(const WaveField& f);

struct QmPeak {
  double x = 0.0;
  double height = 0.0;
  double half_width = 0.0;  // (hi - lo) / 2
  double lo = 0.0;  // where rho falls to half the peak height
  double hi = 0.0;
};

struct QmObservables {
  double mean_x = 0.0;
  double dx = 0.0;
  double mean_p = 0.0;
  double dp = 0.0;
  double p_minus = 0.0;  // mass in x < 0 (the x = 0 sample counts half)
  double p_plus = 0.0;
  QmPeak x_left, x_right;  // largest maximum of rho on each side
  QmPeak p_left, p_right;
};

QmObservables observables(const WaveField& f);

/// Largest maximum of a sampled density on one side of the origin, refined by
/// a parabola through the three top samples.
QmPeak side_peak(const Eigen::ArrayXd& x, const Eigen::ArrayXd& rho, bool right);

struct PhaseProfile {
  QmPeak peak;
  std::vector<double> x;
  std::vector<double> re_psi2;  // |Re psi|^2 = rho cos^2(phi)
  std::vector<double> rho;
};

/// |Re psi|^2 and rho on a window of width_mult half-widths centred on the
/// right peak. Throws NotSplit if the half-maximum region of the right peak
/// reaches the origin.
PhaseProfile env_phase_profile(const WaveField& f, double width_mult = 6.0);

/// Zero crossings of Re psi within one half-width of the right peak.
/// Throws NotSplit as env_phase_profile.
int decoherence_profile(const WaveField& f);

struct QmSnapshot {
  double t = 0.0;
  WaveField field;
  MomentumPdf momentum;
  QmObservables obs;
};

/// Evolves f through the requested times (ascending, each a multiple of f.dt)
/// and records a snapshot at each. If `keep` is false only obs is filled.
/// Throws BoundaryContamination if more than 1e-8 of |psi|^2 lies within 5% of
/// either edge at a sampled time.
std::vector<QmSnapshot> evolve_qm(WaveField& f, const std::vector<double>& times,
                                  bool keep = true,
                                  FftPrecision precision = FftPrecision::Double);

/// Mass of |psi|^2 within `frac` of the domain width from either edge.
double edge_mass(const WaveField& f, double frac = 0.05);

/// Dimensionless setup: Kummer potential with C = 1, ell = eps^beta, and a
/// packet at rest at the origin with sigma = ell/mu.
struct SemiClassicalCase {
  double epsilon = 1.0;
  double beta = 0.5;
  double mu = 1.0;
  double alpha = 1.0 / 3.0;

  PotentialSpec potential() const;
  WavePacketSpec packet() const;
  QmGridSpec grid() const;
};

}  // namespace qss
