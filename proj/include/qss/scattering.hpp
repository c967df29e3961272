#pragma once

// Fine-tuned scattering of an incoming packet off the regularised cusp. The
// packet is aimed so that its classical image reaches the origin, where the
// flow is non-Lipschitz.

#include <utility>
#include <vector>

#include "qss/classical.hpp"
#include "qss/potentials.hpp"
#include "qss/wkb.hpp"

namespace qss {

enum class Tuning { AtXInf, AtXStar, OffsetKappa };

/// Where the packet is centred and how sigma follows ell:
///   AtXInf       <x> = x_inf,             sigma = ell
///   AtXStar      <x> = x_star,            sigma = beta ell^(1+alpha) / |x_star|^alpha
///   OffsetKappa  <x> = x_star - kappa sigma, sigma = ell / mu
struct TuningSpec {
  Tuning mode = Tuning::AtXInf;
  double kappa = 0.0;
  double beta = 1.0;
  double mu = 1.0;
  /// Kummer only: take x_inf from the Kummer potential's own energy balance
  /// instead of the spliced formula.
  bool self_consistent = false;
};

struct ScatterSetup {
  PotentialSpec pot;
  double v_in = 0.0;
  double x_star = 0.0;  // v_in = -sign(x) (2C/(1+alpha))^(1/2) |x|^((1+alpha)/2)
  double x_inf = 0.0;   // reaches the origin at rest after infinite time
  double gamma = 0.0;   // (C / ell^(1-alpha))^(1/2)
  double t_star = 0.0;  // extremal cusp transit time from x_star to 0
  TuningSpec tuning;
  double sigma = 0.0;
  double mean_x = 0.0;

  /// Packet with the tuned mean and width, moving at v_in.
  WavePacketSpec packet(double hbar_eff = 0.0) const;
  /// True when |v_in| > (C ell^(1+alpha))^(1/2), so that |x_inf| > ell.
  bool outer() const;
};

/// Spliced or Kummer potential; v_in != 0.
ScatterSetup make_setup(const PotentialSpec& pot, double v_in, TuningSpec tuning = {});

/// (1/gamma) arctanh(((1+alpha)/(1+alpha+2 xi))^(1/2)), the time spent in |x| < ell
/// by the orbit with |x0|^(1+alpha) = |x_inf|^(1+alpha) - xi ell^(1+alpha).
double inner_transit_time(const ScatterSetup& setup, double xi);

enum class PreimageMode { Auto, Asymptotic, Exact };

/// x0 whose orbit with initial velocity v_in sits at the origin at time t.
/// Asymptotic: |x0|^(1+alpha) = |x_inf|^(1+alpha) - 2(1+alpha) e^(-2 gamma (t - t_star)) ell^(1+alpha).
/// Exact: outer cusp transit plus inner_transit_time equals t, solved in xi.
/// Auto uses Exact when ell/|x_star| > 1e-4. Throws NoPreimage for t < t_star.
double preimage_of_origin(const ScatterSetup& setup, double t,
                          PreimageMode mode = PreimageMode::Auto);

/// xi of the exact preimage at time t (0 if it underflows).
double preimage_xi(const ScatterSetup& setup, double t);

/// Closed-form orbit of the spliced potential from (x0, v_in) at time t, for
/// x0 on the incoming side with |x0| > ell. The orbit is labelled by xi, so
/// x0 exponentially close to x_inf keeps its full precision. Fills x, v, J and t.
ClassicalState scatter_orbit(const ScatterSetup& setup, double x0, double t);

/// (preimage_of_origin(t) - <x>) / sigma.
double y_star(const ScatterSetup& setup, const WavePacketSpec& wp, double t);

/// (p_minus, p_plus) = (Phi(y), 1 - Phi(y)) for the standard normal Phi.
std::pair<double, double> split_probs(double y);

struct ScatterSnapshot {
  double t = 0.0;
  double x_c = 0.0;  // x_+(|t - t_star|) of the cusp
  double p_minus = 0.0;
  double p_plus = 0.0;
  double y_star = 0.0;  // NaN before t_star
  double peak_left = 0.0;  // NaN if there is no mass on that side
  double peak_right = 0.0;
};

struct ScatterRun {
  std::vector<WkbEnsemble> ensembles;
  std::vector<ScatterSnapshot> snapshots;
};

/// WKB ensembles of the tuned packet, with p_minus, p_plus from the
/// transported density and the density peak on each side of the origin.
/// For the spliced potential with the packet outside |x| <= ell the states come
/// from scatter_orbit (S, K, Jp, Kp are left at zero); otherwise they are
/// integrated by build_ensembles with grid.n_s raised to at least -8.
ScatterRun run_scatter_wkb(const PotentialSpec& pot, const ScatterSetup& setup,
                           const WavePacketSpec& wp, const std::vector<double>& times,
                           GridSpec grid = {}, IntegratorConfig cfg = {});

}  // namespace qss
