#pragma once

// Real-argument special functions: Gamma, erfc, Gauss 2F1 and Kummer 1F1.
//
// Everything here is a pure function templated on the floating-point type.
// The library instantiates double; long double works but the series
// tolerances are tuned for double.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qss/errors.hpp"

namespace qss {

namespace detail {

inline constexpr int kMaxSeriesTerms = 10000;
inline constexpr double kSeriesRelTol = 1e-17;
inline constexpr int kSmallTermsToStop = 3;
// 1F1 with |z| beyond this uses the large-argument expansion.
inline constexpr double kKummerAsymptoticSwitch = 60.0;

template <typename Real>
bool is_nonpositive_integer(Real x) {
  return x <= Real(0) && x == std::round(x);
}

template <typename Real>
bool is_near_integer(Real x, Real tol = Real(1e-9)) {
  return std::abs(x - std::round(x)) < tol;
}

/// 1/Gamma(x), zero at the poles.
template <typename Real>
Real rgamma(Real x) {
  if (is_nonpositive_integer(x)) return Real(0);
  return Real(1) / std::tgamma(x);
}

/// Sums t_0 + t_1 + ... with t_0 = 1 and t_{n+1} = t_n * ratio(n).
/// Stops after three consecutive terms fall below kSeriesRelTol * |sum|.
template <typename Real, typename Ratio>
Real sum_hypergeometric_series(Ratio&& ratio, const char* what) {
  Real term(1);
  Real sum(1);
  int small = 0;
  for (int n = 0; n < kMaxSeriesTerms; ++n) {
    term *= ratio(n);
    sum += term;
    if (!std::isfinite(sum)) {
      throw ConvergenceError(std::string(what) + ": series overflow");
    }
    if (std::abs(term) <= Real(kSeriesRelTol) * std::abs(sum)) {
      if (++small >= kSmallTermsToStop) return sum;
    } else {
      small = 0;
    }
  }
  throw ConvergenceError(std::string(what) + ": no convergence within " +
                         std::to_string(kMaxSeriesTerms) + " terms");
}

template <typename Real>
Real hyp2f1_series(Real a, Real b, Real c, Real z) {
  return sum_hypergeometric_series<Real>(
      [&](int n) {
        const Real k(n);
        return (a + k) * (b + k) / ((c + k) * (k + Real(1))) * z;
      },
      "hyp2f1");
}

template <typename Real>
Real hyp1f1_series(Real a, Real b, Real z) {
  return sum_hypergeometric_series<Real>(
      [&](int n) {
        const Real k(n);
        return (a + k) / ((b + k) * (k + Real(1))) * z;
      },
      "hyp1f1");
}

/// Large negative argument: M(a,b,z) ~ Gamma(b)/Gamma(b-a) (-z)^(-a)
///   * sum_s (a)_s (a-b+1)_s / s! (-z)^(-s).
/// The exponentially small e^z branch is below double resolution for
/// -z >= kKummerAsymptoticSwitch.
template <typename Real>
Real hyp1f1_asymptotic_negative(Real a, Real b, Real z) {
  const Real w = -z;
  Real term(1);
  Real sum(1);
  Real prev_abs = std::numeric_limits<Real>::infinity();
  int small = 0;
  for (int s = 0; s < kMaxSeriesTerms; ++s) {
    const Real k(s);
    term *= (a + k) * (a - b + Real(1) + k) / ((k + Real(1)) * w);
    const Real abs_term = std::abs(term);
    if (abs_term > prev_abs && abs_term > Real(1e-15) * std::abs(sum)) {
      throw ConvergenceError("hyp1f1: asymptotic expansion diverged before reaching tolerance");
    }
    if (abs_term > prev_abs) break;  // optimal truncation, already below 1e-15
    prev_abs = abs_term;
    sum += term;
    if (abs_term <= Real(kSeriesRelTol) * std::abs(sum)) {
      if (++small >= kSmallTermsToStop) break;
    } else {
      small = 0;
    }
  }
  return std::tgamma(b) * rgamma(b - a) * std::pow(w, -a) * sum;
}

/// z -> 1-z connection formula for 1/2 < z < 1, with w = 1 - z supplied
/// separately so callers can pass it without cancellation.
template <typename Real>
Real hyp2f1_connection(Real a, Real b, Real c, Real w) {
  const Real s = c - a - b;
  const Real t1 = std::tgamma(c) * std::tgamma(s) * rgamma(c - a) * rgamma(c - b) *
                  hyp2f1_series(a, b, a + b - c + Real(1), w);
  const Real t2 = std::pow(w, s) * std::tgamma(c) * std::tgamma(-s) * rgamma(a) * rgamma(b) *
                  hyp2f1_series(c - a, c - b, s + Real(1), w);
  return t1 + t2;
}

}  // namespace detail

/// Gamma function; PoleError at non-positive integers.
template <typename Real>
Real gamma_fn(Real x) {
  if (detail::is_nonpositive_integer(x)) {
    throw PoleError("gamma_fn at non-positive integer " + std::to_string(double(x)));
  }
  return std::tgamma(x);
}

template <typename Real>
Real erfc_fn(Real x) {
  return std::erfc(x);
}

/// Gauss hypergeometric function 2F1(a,b;c;z) for real parameters and z <= 1.
///
/// |z| <= 1/2 sums the power series directly. 1/2 < z < 1 goes through the
/// z -> 1-z connection formula (c-a-b must not be an integer), z < -1/2
/// through the Pfaff transformation z -> z/(z-1). z = 1 is Gauss's theorem and
/// needs c-a-b > 0.
template <typename Real>
Real gauss_2f1(Real a, Real b, Real c, Real z) {
  using detail::rgamma;
  if (!(z <= Real(1))) throw DomainError("gauss_2f1 requires z <= 1");
  if (detail::is_nonpositive_integer(c)) {
    throw DomainError("gauss_2f1: c is a non-positive integer");
  }
  if (z == Real(0) || a == Real(0) || b == Real(0)) return Real(1);

  if (std::abs(z) <= Real(0.5)) return detail::hyp2f1_series(a, b, c, z);

  const Real s = c - a - b;
  if (z == Real(1)) {
    if (!(s > Real(0))) throw DomainError("gauss_2f1 at z = 1 requires c - a - b > 0");
    return std::tgamma(c) * std::tgamma(s) * rgamma(c - a) * rgamma(c - b);
  }

  if (z > Real(0)) {
    if (detail::is_near_integer(s)) {
      // Logarithmic case; fall back to the slowly converging direct series.
      return detail::hyp2f1_series(a, b, c, z);
    }
    return detail::hyp2f1_connection(a, b, c, Real(1) - z);
  }

  // z < -1/2: Pfaff, w = z/(z-1) lies in (1/3, 1) and 1 - w = 1/(1-z).
  const Real w = z / (z - Real(1));
  const Real pre = std::pow(Real(1) - z, -a);
  if (w <= Real(0.5)) return pre * detail::hyp2f1_series(a, c - b, c, w);
  if (detail::is_near_integer(b - a)) {
    throw DomainError("gauss_2f1: b - a integer with z < -1 is not supported");
  }
  return pre * detail::hyp2f1_connection(a, c - b, c, Real(1) / (Real(1) - z));
}

/// Kummer confluent hypergeometric function 1F1(a;b;z) = M(a,b,z).
///
/// Negative arguments use the Kummer transformation e^z M(b-a,b,-z) (a series
/// of positive terms for b > a > ...) up to |z| = 60 and the large-argument
/// expansion beyond that. Positive arguments are summed directly up to 60 and
/// mapped to the negative side otherwise.
template <typename Real>
Real kummer_1f1(Real a, Real b, Real z) {
  if (detail::is_nonpositive_integer(b)) {
    throw DomainError("kummer_1f1: b is a non-positive integer");
  }
  if (a == b) return std::exp(z);
  if (z == Real(0) || a == Real(0)) return Real(1);
  if (detail::is_nonpositive_integer(a)) return detail::hyp1f1_series(a, b, z);  // polynomial
  if (detail::is_nonpositive_integer(b - a)) {
    return std::exp(z) * detail::hyp1f1_series(b - a, b, -z);  // e^z times a polynomial
  }

  const Real switch_at(detail::kKummerAsymptoticSwitch);
  if (z < Real(0)) {
    if (z >= Real(-1)) return detail::hyp1f1_series(a, b, z);
    if (z >= -switch_at) return std::exp(z) * detail::hyp1f1_series(b - a, b, -z);
    return detail::hyp1f1_asymptotic_negative(a, b, z);
  }
  if (z <= switch_at) return detail::hyp1f1_series(a, b, z);
  return std::exp(z) * detail::hyp1f1_asymptotic_negative(b - a, b, -z);
}

}  // namespace qss
