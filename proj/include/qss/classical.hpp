#pragma once

// Hamilton's equations for a unit-mass particle, transported together with the
// first and second variations with respect to the initial position, plus the
// closed-form solutions available for the cusp and spliced potentials.

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "qss/potentials.hpp"

namespace qss {

/// x, v and the variations J = dx_t/dx0, K = dv_t/dx0, Jp = d2x_t/dx0^2,
/// Kp = d2v_t/dx0^2, plus the action S (per unit mass) and the time t.
struct ClassicalState {
  double x = 0.0;
  double v = 0.0;
  double J = 1.0;
  double K = 0.0;
  double Jp = 0.0;
  double Kp = 0.0;
  double S = 0.0;
  double t = 0.0;
};

using StateVector = Eigen::Matrix<double, 7, 1>;

StateVector to_vector(const ClassicalState& s);
ClassicalState from_vector(const StateVector& y, double t);

/// H0 = v^2/2 + V(x).
double energy(const PotentialSpec& spec, const ClassicalState& s);

enum class IntegrationMethod { AdaptiveRK45 };

/// How many variational equations ride along with (x, v, S).
enum class Variations { None, First, Second };

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  /// NaN selects 0.01 * spec.time_unit().
  double max_step = std::numeric_limits<double>::quiet_NaN();
  IntegrationMethod method = IntegrationMethod::AdaptiveRK45;
  Variations variations = Variations::Second;

  void validate() const;
  double resolved_max_step(const PotentialSpec& spec) const;
};

/// Time derivative of the full state; the returned t field is 1.
ClassicalState rhs(const PotentialSpec& spec, const ClassicalState& s);
StateVector rhs_vector(const PotentialSpec& spec, const StateVector& y, Branch branch,
                       Variations variations);

struct EvolveOptions {
  /// Sorted output times in (t0, t_end]; the integrator lands on each exactly.
  std::vector<double> sample_times;
  std::function<void(const ClassicalState&)> on_sample;
  /// Record every accepted step (and every region crossing) in the result.
  bool record_steps = true;
  /// Optional stop condition: integration ends at the first time g rises
  /// through zero (g < 0 before, g >= 0 after).
  std::function<double(const ClassicalState&)> event;
};

struct EvolveResult {
  std::vector<ClassicalState> samples;
  ClassicalState final_state;
  std::optional<ClassicalState> event_state;
  long steps = 0;
  int crossings = 0;
};

/// Adaptive RK45 integration from s0 up to t_end. For the spliced potential the
/// run is split at |x| = ell and the second variation receives the kick
/// dKp = -[V''] J^2 / |v| caused by the jump of V''. For the cusp it is split
/// at x = 0 (variations are undefined there and raise NonSmoothPoint).
EvolveResult evolve_with(const PotentialSpec& spec, const ClassicalState& s0, double t_end,
                         const IntegratorConfig& cfg, const EvolveOptions& opts);

/// Trajectory of accepted steps including both end points.
std::vector<ClassicalState> evolve(const PotentialSpec& spec, const ClassicalState& s0,
                                   double t_end, const IntegratorConfig& cfg = {});

// ---- cusp closed forms -------------------------------------------------------

/// k = (1-alpha)/2 * (2C/(1+alpha))^(1/2).
double cusp_rate(double C, double alpha);
/// Extremal escape x_+(t) = (k t)^(2/(1-alpha)) and its velocity.
double extremal_position(const PotentialSpec& spec, double t);
double extremal_velocity(const PotentialSpec& spec, double t);

/// All non-negative times at which the cusp trajectory from (x0, v0) passes
/// through the signed position x, in increasing order. Throws Unreachable if
/// there are none.
std::vector<double> cusp_arrival_times(const PotentialSpec& spec, double x0, double v0, double x);
/// Earliest arrival time at x.
double exact_cusp_time(const PotentialSpec& spec, double x0, double v0, double x);

struct PhasePoint {
  double x;
  double v;
};
/// Inverse of the implicit solution: the cusp trajectory from (x0, v0) at time t.
PhasePoint cusp_position_at(const PotentialSpec& spec, double x0, double v0, double t);

// ---- spliced closed forms ----------------------------------------------------

/// Time for a particle released at rest from 0 < x0 < ell to reach ell.
double spliced_exit_time(const PotentialSpec& spec, double x0);
/// Position at time t of a particle released at rest from x0 > 0.
double spliced_position_closed(const PotentialSpec& spec, double x0, double t);
/// J_t(x0) for a particle released at rest from x0 > 0.
double spliced_jacobian_closed(const PotentialSpec& spec, double x0, double t);

// ---- long-time limit ---------------------------------------------------------

/// -J'/J in the limit t -> infinity, as a function of u0 = x0/ell (> 0, != 1),
/// in units of 1/ell.
double jpj_infinity(double alpha, double u0);
/// Coefficient c of the divergence -J'/J ~ c / sqrt(1 - u0^2) as u0 -> 1-.
double jpj_singular_coefficient(double alpha);

/// (r0^(2/3) + (2/3) C eps^(1/3) t)^(3/2).
double richardson_toy(double r0, double C, double eps_diss, double t);

}  // namespace qss
