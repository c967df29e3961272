#pragma once

#include <string>
#include <string_view>

namespace qss {

enum class PotentialKind { Cusp, Kummer, Spliced, InvertedOscillator, Free };

std::string_view to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(std::string_view name);

/// Potential energy per unit mass. Immutable once built; use the named
/// constructors, which validate the parameters.
///
///   Cusp                V = -C|x|^(1+a)/(1+a)
///   Kummer              Gaussian-smoothed cusp (width ell), via 1F1
///   Spliced             inverted parabola for |x| < ell, cusp outside, C^1 at |x| = ell
///   InvertedOscillator  V = -C x^2 / 2
///   Free                V = 0
class PotentialSpec {
 public:
  static PotentialSpec cusp(double C, double alpha);
  static PotentialSpec kummer(double C, double alpha, double ell);
  static PotentialSpec spliced(double C, double alpha, double ell);
  static PotentialSpec inverted_oscillator(double C);
  static PotentialSpec free_particle();
  /// Generic constructor used by the config layer.
  static PotentialSpec make(PotentialKind kind, double C, double alpha, double ell);

  PotentialKind kind() const { return kind_; }
  double C() const { return C_; }
  double alpha() const { return alpha_; }
  double ell() const { return ell_; }

  /// A_alpha for the current alpha; always recomputed.
  double a_alpha() const;
  /// Inner time scale (ell^(1-alpha)/C)^(1/2); 1/sqrt(C) when there is no ell.
  double time_unit() const;
  /// Inner inverse time gamma = (C/ell^(1-alpha))^(1/2) = 1/time_unit().
  double inner_rate() const { return 1.0 / time_unit(); }

 private:
  PotentialSpec(PotentialKind kind, double C, double alpha, double ell)
      : kind_(kind), C_(C), alpha_(alpha), ell_(ell) {}

  PotentialKind kind_;
  double C_;
  double alpha_;
  double ell_;
};

/// V and its first three derivatives at one point.
struct PotentialDerivs {
  double v;
  double dv;
  double d2v;
  double d3v;
};

/// Which branch of a piecewise potential to evaluate. Auto picks by |x|,
/// with |x| = ell belonging to the outer branch.
enum class Branch { Auto, Inner, Outer };

double eval_v(const PotentialSpec& spec, double x);
double eval_dv(const PotentialSpec& spec, double x);
/// Throws NonSmoothPoint for the cusp at x = 0.
double eval_d2v(const PotentialSpec& spec, double x);
/// Throws NonSmoothPoint for the cusp at x = 0.
double eval_d3v(const PotentialSpec& spec, double x);

/// All four at once. `branch` only matters for Spliced: a forced branch is the
/// analytic continuation of that formula, which lets an integrator keep one
/// smooth right-hand side for a whole segment.
PotentialDerivs eval_derivs(const PotentialSpec& spec, double x, Branch branch = Branch::Auto);
/// Cheaper variant that skips V''' (and V'' if `order` < 2).
PotentialDerivs eval_derivs_upto(const PotentialSpec& spec, double x, int order,
                                 Branch branch = Branch::Auto);

/// A_alpha = 2^((1+alpha)/2) Gamma((2+alpha)/2) / sqrt(pi).
double a_alpha(double alpha);

/// Jump of V'' across x = +ell / x = -ell for the spliced potential, taken in
/// the direction of increasing x: V''(x_c+) - V''(x_c-).
double spliced_d2v_jump(const PotentialSpec& spec, double crossing_x);

}  // namespace qss
