#pragma once

// High-precision reference values used only by the tests.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>

namespace oracle {

using mp = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<260>>;

/// Direct power series of 2F1 in 260-digit arithmetic; |z| < 1.
inline double hyp2f1(double a, double b, double c, double z) {
  mp term = 1, sum = 1;
  const mp A = a, B = b, Cc = c, Z = z;
  const mp eps = mp(1e-40);
  for (int n = 0; n < 200000; ++n) {
    term *= (A + n) * (B + n) / ((Cc + n) * (n + 1)) * Z;
    sum += term;
    if (abs(term) < eps * abs(sum) && n > 5) break;
  }
  return static_cast<double>(sum);
}

/// Direct power series of 1F1 in 260-digit arithmetic (any real z up to a few hundred).
inline double hyp1f1(double a, double b, double z) {
  mp term = 1, sum = 1;
  const mp A = a, B = b, Z = z;
  const mp eps = mp(1e-40);
  for (int n = 0; n < 200000; ++n) {
    term *= (A + n) / ((B + n) * (n + 1)) * Z;
    sum += term;
    if (abs(term) < eps * abs(sum) && n > std::abs(z) + 5) break;
  }
  return static_cast<double>(sum);
}

inline double tgamma(double x) {
  using f50 = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<50>>;
  return static_cast<double>(boost::math::tgamma(f50(x)));
}

inline double erfc(double x) {
  using f50 = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<50>>;
  return static_cast<double>(boost::math::erfc(f50(x)));
}

/// Euler integral: Gamma(c)/(Gamma(b)Gamma(c-b)) int_0^1 t^(b-1)(1-t)^(c-b-1)(1-zt)^(-a) dt,
/// valid for c > b > 0 and z < 1.
inline double hyp2f1_euler(double a, double b, double c, double z) {
  boost::math::quadrature::tanh_sinh<long double> integrator;
  const long double la = a, lb = b, lc = c, lz = z;
  auto f = [&](long double t, long double tc) {
    const long double one_minus_t = t > 0.5L ? tc : 1.0L - t;
    return std::pow(t, lb - 1) * std::pow(one_minus_t, lc - lb - 1) * std::pow(1 - lz * t, -la);
  };
  const long double integral = integrator.integrate(f, 0.0L, 1.0L);
  return static_cast<double>(std::tgamma(lc) / (std::tgamma(lb) * std::tgamma(lc - lb)) * integral);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace oracle
