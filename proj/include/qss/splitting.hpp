#pragma once

// Splitting of the symmetric WKB density: extrema of rho0/J in u0 = x0/ell
// solve -J'/J = mu^2 u0, with J' the derivative in u0.

#include <limits>
#include <vector>

#include "qss/classical.hpp"
#include "qss/potentials.hpp"

namespace qss {

enum class ExtremumKind { Max, Min };
enum class BifurcationKind { Pitchfork, SaddleNode };

struct BranchPoint {
  double tau;
  double u0;
  ExtremumKind kind;
};

struct SplitResult {
  double mu = 0.0;
  double tau_c = 0.0;  // in units of (ell^(1-alpha)/C)^(1/2)
  double t_c = 0.0;    // physical time
  double u0_c = 0.0;   // where the new maximum is born (smallest scan point for a pitchfork)
  BifurcationKind bifurcation_kind = BifurcationKind::Pitchfork;
  std::vector<BranchPoint> branch_points;
};

/// u0 grid: log-spaced, per_decade points per decade over [u_min, u_max].
/// For the spliced potential, extremum scans add per_decade / 8 points per
/// decade in 1 - u0 below u0 = 1 down to 1 - 1e-15.
struct ScanSpec {
  int per_decade = 512;
  double u_min = 1e-6;
  double u_max = 10.0;
};

std::vector<double> scan_grid(const PotentialSpec& pot, const ScanSpec& scan,
                              bool near_splice = false);

/// -J'/J at u0 and tau, J' taken in u0.
double jpj_ratio(const PotentialSpec& pot, double u0, double tau, IntegratorConfig cfg = {});

/// First tau at which -J'/J reaches mu^2 u0, or +inf if not before tau_max.
double crossing_time(const PotentialSpec& pot, double mu, double u0, double tau_max,
                     IntegratorConfig cfg = {});

/// Positive roots of -J'/J = mu^2 u0 at tau, refined by bisection and
/// classified as maxima or minima of rho. The kink of the spliced density at
/// u0 = 1 is not a root.
std::vector<BranchPoint> extremum_condition(const PotentialSpec& pot, double mu, double tau,
                                            const ScanSpec& scan = {},
                                            IntegratorConfig cfg = {});

/// 50 + 2 arccosh(max(mu, 1)).
double default_tau_max(double mu);

/// First time a maximum of rho appears at u0 > 0. Throws NoSplitWithinHorizon
/// if there is none before tau_max (NaN selects default_tau_max).
SplitResult splitting_time(const PotentialSpec& pot, double mu, const ScanSpec& scan = {},
                           IntegratorConfig cfg = {},
                           double tau_max = std::numeric_limits<double>::quiet_NaN());

/// All extrema (including u0 = 0) on n_tau equally spaced times in (0, tau_max].
/// For the spliced potential the corner of rho at x0 = ell is reported at u0 = 1.
std::vector<BranchPoint> bifurcation_diagram(const PotentialSpec& pot, double mu,
                                             double tau_max, int n_tau = 200,
                                             const ScanSpec& scan = {},
                                             IntegratorConfig cfg = {});

}  // namespace qss
