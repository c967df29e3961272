#include "qss/potentials.hpp"

#include <cmath>
#include <numbers>

#include "qss/errors.hpp"
#include "qss/specfun.hpp"

namespace qss {

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Cusp: return "cusp";
    case PotentialKind::Kummer: return "kummer";
    case PotentialKind::Spliced: return "spliced";
    case PotentialKind::InvertedOscillator: return "inverted-oscillator";
    case PotentialKind::Free: return "free";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(std::string_view name) {
  if (name == "cusp") return PotentialKind::Cusp;
  if (name == "kummer") return PotentialKind::Kummer;
  if (name == "spliced") return PotentialKind::Spliced;
  if (name == "inverted-oscillator" || name == "inverted_oscillator") {
    return PotentialKind::InvertedOscillator;
  }
  if (name == "free") return PotentialKind::Free;
  throw ValidationError("unknown potential kind '" + std::string(name) + "'");
}

namespace {

void require_power_law(double C, double alpha) {
  if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("potential needs C > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("potential needs 0 < alpha < 1");
}

void require_ell(double ell) {
  if (!(ell > 0.0) || !std::isfinite(ell)) throw DomainError("potential needs ell > 0");
}

PotentialDerivs cusp_derivs(double C, double alpha, double x, int order) {
  const double r = std::abs(x);
  const double s = (x > 0.0) - (x < 0.0);
  PotentialDerivs d{};
  const double r_alpha = std::pow(r, alpha);
  d.v = -C * r_alpha * r / (1.0 + alpha);
  d.dv = -C * r_alpha * s;
  if (order >= 2) {
    if (r == 0.0) throw NonSmoothPoint("cusp V'' and V''' are undefined at x = 0");
    d.d2v = -C * alpha * r_alpha / r;
    if (order >= 3) d.d3v = C * alpha * (1.0 - alpha) * r_alpha / (r * r) * s;
  }
  return d;
}

PotentialDerivs spliced_inner_derivs(double C, double alpha, double ell, double x) {
  const double curv = C * std::pow(ell, alpha - 1.0);
  PotentialDerivs d{};
  d.v = -0.5 * curv * (ell * ell * (1.0 - alpha) / (1.0 + alpha) + x * x);
  d.dv = -curv * x;
  d.d2v = -curv;
  d.d3v = 0.0;
  return d;
}

PotentialDerivs kummer_derivs(double C, double alpha, double ell, double x, int order) {
  const double A = a_alpha(alpha);
  const double z = -x * x / (2.0 * ell * ell);
  const double pref = A * C * std::pow(ell, alpha - 1.0);
  PotentialDerivs d{};
  d.v = -pref * ell * ell / (1.0 + alpha) * kummer_1f1(-0.5 * (1.0 + alpha), 0.5, z);
  d.dv = -pref * x * kummer_1f1(0.5 * (1.0 - alpha), 1.5, z);
  if (order >= 2) d.d2v = -pref * kummer_1f1(0.5 * (1.0 - alpha), 0.5, z);
  if (order >= 3) {
    d.d3v = (1.0 - alpha) * pref * x / (ell * ell) * kummer_1f1(0.5 * (3.0 - alpha), 1.5, z);
  }
  return d;
}

}  // namespace

PotentialSpec PotentialSpec::cusp(double C, double alpha) {
  require_power_law(C, alpha);
  return {PotentialKind::Cusp, C, alpha, 0.0};
}

PotentialSpec PotentialSpec::kummer(double C, double alpha, double ell) {
  require_power_law(C, alpha);
  require_ell(ell);
  return {PotentialKind::Kummer, C, alpha, ell};
}

PotentialSpec PotentialSpec::spliced(double C, double alpha, double ell) {
  require_power_law(C, alpha);
  require_ell(ell);
  return {PotentialKind::Spliced, C, alpha, ell};
}

PotentialSpec PotentialSpec::inverted_oscillator(double C) {
  if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("potential needs C > 0");
  return {PotentialKind::InvertedOscillator, C, 1.0, 0.0};
}

PotentialSpec PotentialSpec::free_particle() { return {PotentialKind::Free, 1.0, 0.0, 0.0}; }

PotentialSpec PotentialSpec::make(PotentialKind kind, double C, double alpha, double ell) {
  switch (kind) {
    case PotentialKind::Cusp: return cusp(C, alpha);
    case PotentialKind::Kummer: return kummer(C, alpha, ell);
    case PotentialKind::Spliced: return spliced(C, alpha, ell);
    case PotentialKind::InvertedOscillator: return inverted_oscillator(C);
    case PotentialKind::Free: return free_particle();
  }
  throw DomainError("unknown potential kind");
}

double PotentialSpec::a_alpha() const { return qss::a_alpha(alpha_); }

double PotentialSpec::time_unit() const {
  if (ell_ > 0.0) return std::sqrt(std::pow(ell_, 1.0 - alpha_) / C_);
  return 1.0 / std::sqrt(C_);
}

double a_alpha(double alpha) {
  return std::pow(2.0, 0.5 * (1.0 + alpha)) * gamma_fn(0.5 * (2.0 + alpha)) /
         std::sqrt(std::numbers::pi);
}

PotentialDerivs eval_derivs_upto(const PotentialSpec& spec, double x, int order, Branch branch) {
  const double C = spec.C();
  const double alpha = spec.alpha();
  switch (spec.kind()) {
    case PotentialKind::Cusp: return cusp_derivs(C, alpha, x, order);
    case PotentialKind::Kummer: return kummer_derivs(C, alpha, spec.ell(), x, order);
    case PotentialKind::Spliced: {
      const bool inner = branch == Branch::Auto ? std::abs(x) < spec.ell() : branch == Branch::Inner;
      return inner ? spliced_inner_derivs(C, alpha, spec.ell(), x) : cusp_derivs(C, alpha, x, order);
    }
    case PotentialKind::InvertedOscillator: return {-0.5 * C * x * x, -C * x, -C, 0.0};
    case PotentialKind::Free: return {0.0, 0.0, 0.0, 0.0};
  }
  throw DomainError("unknown potential kind");
}

PotentialDerivs eval_derivs(const PotentialSpec& spec, double x, Branch branch) {
  return eval_derivs_upto(spec, x, 3, branch);
}

double eval_v(const PotentialSpec& spec, double x) { return eval_derivs_upto(spec, x, 1).v; }
double eval_dv(const PotentialSpec& spec, double x) { return eval_derivs_upto(spec, x, 1).dv; }
double eval_d2v(const PotentialSpec& spec, double x) { return eval_derivs_upto(spec, x, 2).d2v; }
double eval_d3v(const PotentialSpec& spec, double x) { return eval_derivs_upto(spec, x, 3).d3v; }

double spliced_d2v_jump(const PotentialSpec& spec, double crossing_x) {
  const double jump = (1.0 - spec.alpha()) * spec.C() * std::pow(spec.ell(), spec.alpha() - 1.0);
  return crossing_x > 0.0 ? jump : -jump;
}

}  // namespace qss
