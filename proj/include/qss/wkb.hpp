#pragma once

// WKB position density rho(x, t) = rho0(x0) / J_t(x0) transported along a
// log-spaced ensemble of characteristics.

#include <utility>
#include <vector>

#include "qss/classical.hpp"
#include "qss/potentials.hpp"

namespace qss {

/// Minimum-uncertainty Gaussian packet. mean_p is a velocity (unit mass);
/// the initial phase is S0(x) = mean_p * x.
struct WavePacketSpec {
  double sigma = 1.0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double hbar_eff = 0.0;

  void validate() const;
  bool symmetric() const { return mean_x == 0.0 && mean_p == 0.0; }
  double mu(const PotentialSpec& pot) const { return pot.ell() / sigma; }
  double rho0(double x) const;
  /// P(X < x) under rho0.
  double cdf(double x) const;
};

/// x0 = s * 10^(i/n_f), i = n_s*n_f .. n_b*n_f, with s = ell (sigma if there is no ell).
struct GridSpec {
  int n_f = 64;
  int n_s = -12;
  int n_b = 4;
};

struct WkbEnsemble {
  double t = 0.0;
  WavePacketSpec packet;
  std::vector<double> x0;  // sorted
  std::vector<ClassicalState> states;
  std::vector<double> rho0;
  double mass = 0.0;  // trapezoid of rho over the transported grid
};

/// One ensemble per requested time (sorted, >= 0), each trajectory integrated
/// once. Only x0 > 0 is integrated and mirrored for a symmetric packet.
/// Throws ResolutionError if a transported mass falls outside [0.99, 1.01].
std::vector<WkbEnsemble> build_ensembles(const PotentialSpec& pot, const WavePacketSpec& wp,
                                         const std::vector<double>& times, GridSpec grid = {},
                                         IntegratorConfig cfg = {});

/// Fills rho0 and mass from x0, states and packet; throws ResolutionError if
/// the x_t are not increasing or the mass is outside [0.99, 1.01].
void finish_ensemble(WkbEnsemble& e);

WkbEnsemble build_ensemble(const PotentialSpec& pot, const WavePacketSpec& wp, double t,
                           GridSpec grid = {}, IntegratorConfig cfg = {});

/// The initial positions used for a packet: sorted, with dedicated points
/// straddling x0 = +-ell for the spliced potential.
std::vector<double> initial_grid(const PotentialSpec& pot, const WavePacketSpec& wp,
                                 GridSpec grid);

double density_at(const WkbEnsemble& ens, double x);
/// x0 whose characteristic is at x (Hermite inverse of x0 -> x_t).
double preimage(const WkbEnsemble& ens, double x);
/// Probability of x_t in [a, b], from the preimages and the Gaussian CDF.
double interval_mass(const WkbEnsemble& ens, double a, double b);
/// (p_minus, p_plus): probability of x_t < 0 and x_t > 0.
std::pair<double, double> left_right_mass(const WkbEnsemble& ens);
/// Second moment of x_t about the initial mean.
double dispersion(const WkbEnsemble& ens);

/// x_+(t) rho(x_hat x_+(t), t).
double scaled_density(const WkbEnsemble& ens, const PotentialSpec& pot, double x_hat);
/// (x_hat, rho_hat) at every ensemble point.
std::vector<std::pair<double, double>> scaled_density_curve(const WkbEnsemble& ens,
                                                            const PotentialSpec& pot);
double scaled_interval_mass(const WkbEnsemble& ens, const PotentialSpec& pot, double a_hat,
                            double b_hat);

struct WkbValidity {
  double worst_ratio = 0.0;  // over points with a finite ratio
  double worst_x = 0.0;
  int flagged = 0;  // points where the ratio is not finite
};

/// lambda |d/dx (p^2/2)| / max{p^2/2, |dS/dt|, |V|} with lambda = 2 pi hbar / |p|.
WkbValidity wkb_validity(const WkbEnsemble& ens, const PotentialSpec& pot);

}  // namespace qss
