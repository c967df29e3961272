#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qss/classical.hpp"
#include "qss/cli_io.hpp"
#include "qss/errors.hpp"
#include "qss/scattering.hpp"
#include "qss/schrodinger.hpp"
#include "qss/splitting.hpp"
#include "qss/wkb.hpp"

namespace qss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) { return format_double(x); }

std::string indexed(const std::string& stem, std::size_t i) {
  return stem + "_" + std::to_string(i) + ".csv";
}

struct Writer {
  std::filesystem::path dir;
  RunOutput out;

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<CsvRow>& rows) {
    write_csv(dir / name, header, rows);
    out.csv_files.push_back(name);
  }
};

GridSpec grid_of(const RunConfig& cfg) {
  GridSpec g;
  g.n_f = static_cast<int>(cfg.integer("n-f"));
  g.n_s = static_cast<int>(cfg.integer("n-s"));
  g.n_b = static_cast<int>(cfg.integer("n-b"));
  if (g.n_f < 1 || g.n_s >= g.n_b) throw ValidationError("WKB grid needs n-f >= 1 and n-s < n-b");
  return g;
}

IntegratorConfig uncapped() {
  IntegratorConfig c;
  c.max_step = std::numeric_limits<double>::infinity();
  return c;
}

double positive(const RunConfig& cfg, const std::string& key) {
  const double v = cfg.number(key);
  if (!(v > 0.0)) throw ValidationError(key + " must be positive");
  return v;
}

std::vector<double> sorted_nonneg(const RunConfig& cfg, const std::string& key) {
  auto v = cfg.numbers(key);
  if (!std::is_sorted(v.begin(), v.end()) || v.front() < 0.0) {
    throw ValidationError(key + " must be ascending and non-negative");
  }
  return v;
}

PotentialSpec cusp_of(const RunConfig& cfg) {
  return PotentialSpec::cusp(cfg.number("C"), cfg.rational("alpha").value());
}

CsvRow density_row(const WkbEnsemble& e, std::size_t i) {
  const auto& s = e.states[i];
  return {fmt(e.x0[i]), fmt(s.x), fmt(e.rho0[i] / std::abs(s.J)), fmt(s.J)};
}

void wkb_evolve(const RunConfig& cfg, Writer& w) {
  const auto pot = cfg.potential();
  const double ell = positive(cfg, "ell");
  WavePacketSpec wp;
  wp.sigma = ell / positive(cfg, "mu");
  wp.mean_x = cfg.number("mean-x") * ell;
  wp.mean_p = cfg.number("mean-v");
  const auto taus = sorted_nonneg(cfg, "taus");
  std::vector<double> times;
  for (double tau : taus) times.push_back(tau * pot.time_unit());
  const auto ens = build_ensembles(pot, wp, times, grid_of(cfg));
  const auto cusp = cusp_of(cfg);
  std::vector<CsvRow> markers;
  for (std::size_t k = 0; k < ens.size(); ++k) {
    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < ens[k].x0.size(); ++i) rows.push_back(density_row(ens[k], i));
    w.csv(indexed("density", k), {"x0", "x", "rho", "J"}, rows);
    const double xp = extremal_position(cusp, times[k]);
    markers.push_back({fmt(taus[k]), fmt(times[k]), fmt(-xp), fmt(xp)});
  }
  w.csv("markers.csv", {"tau", "t", "x_minus", "x_plus"}, markers);
  w.out.resolved["sigma"] = wp.sigma;
  w.out.resolved["time_unit"] = pot.time_unit();
  w.out.resolved["grid_points"] = static_cast<double>(ens.front().x0.size());
}

void wkb_scaling(const RunConfig& cfg, Writer& w) {
  const double t = positive(cfg, "t");
  const double mu = positive(cfg, "mu");
  const auto cusp = cusp_of(cfg);
  const double xp = extremal_position(cusp, t);
  const auto kind = cfg.potential().kind();
  std::vector<CsvRow> summary;
  const auto ratios = cfg.numbers("ratios");
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    if (!(ratios[k] > 0.0)) throw ValidationError("ratios must be positive");
    const double ell = ratios[k] * xp;
    const auto pot = PotentialSpec::make(kind, cusp.C(), cusp.alpha(), ell);
    WavePacketSpec wp;
    wp.sigma = ell / mu;
    const auto e = build_ensemble(pot, wp, t, grid_of(cfg), uncapped());
    std::vector<CsvRow> rows;
    for (const auto& [xh, rh] : scaled_density_curve(e, pot)) {
      if (std::abs(xh) <= 2.0) rows.push_back({fmt(xh), fmt(rh)});
    }
    w.csv(indexed("scaled", k), {"x_hat", "rho_hat"}, rows);
    const auto [pm, pp] = left_right_mass(e);
    summary.push_back({fmt(ratios[k]), fmt(ell), fmt(e.mass), fmt(pm), fmt(pp),
                       fmt(scaled_interval_mass(e, pot, -1.1, -0.9)),
                       fmt(scaled_interval_mass(e, pot, 0.9, 1.1)),
                       fmt(dispersion(e) / (xp * xp))});
  }
  w.csv("summary.csv",
        {"ratio", "ell", "mass", "p_minus", "p_plus", "mass_near_minus1", "mass_near_plus1",
         "dispersion_over_xplus2"},
        summary);
  w.out.resolved["x_plus"] = xp;
}

void splitting_time_run(const RunConfig& cfg, Writer& w) {
  const auto pot = cfg.potential();
  ScanSpec scan;
  scan.per_decade = static_cast<int>(cfg.integer("per-decade"));
  if (scan.per_decade < 1) throw ValidationError("per-decade must be positive");
  const double tau_max = cfg.number("tau-max");
  if (tau_max < 0.0) throw ValidationError("tau-max must not be negative");
  std::vector<CsvRow> rows;
  for (double mu : cfg.numbers("mu-grid")) {
    if (!(mu > 0.0)) throw ValidationError("mu-grid values must be positive");
    const double acosh_mu = mu >= 1.0 ? std::acosh(mu) : kNaN;
    try {
      const auto r = splitting_time(pot, mu, scan, {}, tau_max > 0.0 ? tau_max : kNaN);
      rows.push_back({fmt(mu), fmt(r.tau_c), fmt(r.t_c), fmt(r.u0_c),
                      r.bifurcation_kind == BifurcationKind::Pitchfork ? "pitchfork"
                                                                       : "saddle-node",
                      fmt(acosh_mu)});
    } catch (const NoSplitWithinHorizon&) {
      rows.push_back({fmt(mu), fmt(kNaN), fmt(kNaN), fmt(kNaN), "none", fmt(acosh_mu)});
    }
  }
  w.csv("splitting.csv", {"mu", "tau_c", "t_c", "u0_c", "bifurcation", "arccosh_mu"}, rows);
  w.out.resolved["time_unit"] = pot.time_unit();
}

void bifurcation_run(const RunConfig& cfg, Writer& w) {
  const auto pot = cfg.potential();
  ScanSpec scan;
  scan.per_decade = static_cast<int>(cfg.integer("per-decade"));
  const long long n_tau = cfg.integer("n-tau");
  if (scan.per_decade < 1 || n_tau < 1) throw ValidationError("per-decade and n-tau must be positive");
  auto pts = bifurcation_diagram(pot, positive(cfg, "mu"), positive(cfg, "tau-max"),
                                 static_cast<int>(n_tau), scan);
  // Branch b of a kind is its b-th extremum from the origin at each tau.
  std::stable_sort(pts.begin(), pts.end(), [](const BranchPoint& a, const BranchPoint& b) {
    return a.tau != b.tau ? a.tau < b.tau : a.u0 < b.u0;
  });
  struct Row {
    int kind, branch;
    double tau, u0;
  };
  std::vector<Row> ranked;
  for (std::size_t i = 0; i < pts.size();) {
    int rank[2] = {0, 0};
    const double tau = pts[i].tau;
    for (; i < pts.size() && pts[i].tau == tau; ++i) {
      const int k = pts[i].kind == ExtremumKind::Max ? 0 : 1;
      ranked.push_back({k, rank[k]++, tau, pts[i].u0});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Row& a, const Row& b) {
    return a.kind != b.kind ? a.kind < b.kind : a.branch < b.branch;
  });
  std::vector<CsvRow> rows;
  int branches = 0;
  for (const auto& r : ranked) {
    rows.push_back({fmt(r.tau), fmt(r.u0), r.kind == 0 ? "1" : "-1", std::to_string(r.branch)});
    branches = std::max(branches, r.branch + 1);
  }
  w.csv("bifurcation.csv", {"tau", "u0", "kind", "branch"}, rows);
  w.out.resolved["branches"] = branches;
}

void scatter_run(const RunConfig& cfg, Writer& w) {
  const auto pot = cfg.potential();
  TuningSpec tuning;
  const std::string mode = cfg.text("tuning");
  tuning.mode = mode == "x-inf" ? Tuning::AtXInf
                : mode == "x-star" ? Tuning::AtXStar
                                   : Tuning::OffsetKappa;
  tuning.kappa = cfg.number("kappa");
  tuning.beta = positive(cfg, "beta");
  tuning.mu = positive(cfg, "mu");
  tuning.self_consistent = cfg.flag("self-consistent");
  const double v_unit = std::sqrt(pot.C() * std::pow(pot.ell(), 1.0 + pot.alpha()));
  const auto setup = make_setup(pot, cfg.number("v-in") * v_unit, tuning);
  const auto wp = setup.packet();
  const auto taus = sorted_nonneg(cfg, "taus");
  std::vector<double> times;
  for (double tau : taus) times.push_back(tau * pot.time_unit());
  const auto run = run_scatter_wkb(pot, setup, wp, times);
  std::vector<CsvRow> snaps;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const auto& s = run.snapshots[k];
    const auto [sm, sp] = std::isnan(s.y_star) ? std::pair{kNaN, kNaN} : split_probs(s.y_star);
    snaps.push_back({fmt(taus[k]), fmt(s.t), fmt(s.x_c), fmt(s.p_minus), fmt(s.p_plus),
                     fmt(s.y_star), fmt(sm), fmt(sp), fmt(s.peak_left), fmt(s.peak_right)});
    std::vector<CsvRow> rows;
    const auto& e = run.ensembles[k];
    for (std::size_t i = 0; i < e.x0.size(); ++i) rows.push_back(density_row(e, i));
    w.csv(indexed("density", k), {"x0", "x", "rho", "J"}, rows);
  }
  w.csv("snapshots.csv",
        {"tau", "t", "x_c", "p_minus", "p_plus", "y_star", "phi_minus", "phi_plus", "peak_left",
         "peak_right"},
        snaps);
  w.out.resolved["x_star"] = setup.x_star;
  w.out.resolved["x_inf"] = setup.x_inf;
  w.out.resolved["t_star"] = setup.t_star;
  w.out.resolved["sigma"] = setup.sigma;
  w.out.resolved["mean_x"] = setup.mean_x;
  w.out.resolved["v_in"] = setup.v_in;
}

SemiClassicalCase qm_case(const RunConfig& cfg, double epsilon) {
  SemiClassicalCase c;
  c.epsilon = epsilon;
  c.beta = cfg.rational("beta").value();
  c.mu = positive(cfg, "mu");
  c.alpha = cfg.rational("alpha").value();
  return c;
}

void qm_resolved(const WaveField& f, double d_tilde, RunOutput& out) {
  out.resolved["N"] = static_cast<double>(f.size());
  out.resolved["dt"] = f.dt;
  out.resolved["D_tilde"] = d_tilde;
  out.resolved["dx"] = f.dx;
}

void write_psi(Writer& w, const std::string& name, const WaveField& f, double window) {
  std::vector<CsvRow> rows;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double x = f.x(i);
    if (std::abs(x) > window) continue;
    rows.push_back({fmt(x), fmt(f.psi[i].real()), fmt(f.psi[i].imag()), fmt(std::norm(f.psi[i]))});
  }
  w.csv(name, {"x_tilde", "re_psi", "im_psi", "rho"}, rows);
}

void write_momentum(Writer& w, const std::string& name, const MomentumPdf& m, double window) {
  std::vector<CsvRow> rows;
  for (Eigen::Index i = 0; i < m.p.size(); ++i) {
    if (std::abs(m.p[i]) <= window) rows.push_back({fmt(m.p[i]), fmt(m.rho[i])});
  }
  w.csv(name, {"p_tilde", "rho_p"}, rows);
}

void qm_evolve(const RunConfig& cfg, Writer& w) {
  const auto c = qm_case(cfg, positive(cfg, "epsilon"));
  const std::string kind = cfg.text("potential");
  const auto pot = kind == "kummer" ? c.potential()
                   : kind == "free" ? PotentialSpec::free_particle()
                                    : PotentialSpec::inverted_oscillator(positive(cfg, "C"));
  QmGridSpec g = c.grid();
  g.d_tilde = positive(cfg, "d-tilde");
  if (cfg.integer("n") < 0 || cfg.number("dt") < 0.0) throw ValidationError("n and dt must not be negative");
  g.n = static_cast<int>(cfg.integer("n"));
  g.dt = cfg.number("dt");
  auto f = init_packet(g, pot, c.packet());
  qm_resolved(f, g.d_tilde, w.out);
  const auto times = sorted_nonneg(cfg, "times");
  const auto precision =
      cfg.text("precision") == "extended" ? FftPrecision::Extended : FftPrecision::Double;
  const double xw = cfg.number("x-window"), pw = cfg.number("p-window");
  const auto snaps = evolve_qm(f, times, true, precision);
  std::vector<CsvRow> obs;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto& s = snaps[k];
    write_psi(w, indexed("psi", k), s.field, xw);
    write_momentum(w, indexed("momentum", k), s.momentum, pw);
    const auto& o = s.obs;
    obs.push_back({fmt(s.t), fmt(s.field.norm()), fmt(o.mean_x), fmt(o.dx), fmt(o.mean_p),
                   fmt(o.dp), fmt(o.p_minus), fmt(o.p_plus), fmt(o.x_left.x), fmt(o.x_right.x),
                   fmt(o.p_left.x), fmt(o.p_right.x)});
  }
  w.csv("observables.csv",
        {"t", "norm", "mean_x", "dx", "mean_p", "dp", "p_minus", "p_plus", "x_peak_left",
         "x_peak_right", "p_peak_left", "p_peak_right"},
        obs);
}

void qm_sweep(const RunConfig& cfg, Writer& w) {
  const double t = positive(cfg, "t");
  const double d_tilde = positive(cfg, "d-tilde");
  const double xw = cfg.number("x-window");
  const auto cusp = PotentialSpec::cusp(1.0, cfg.rational("alpha").value());
  const double xp = extremal_position(cusp, t), vp = extremal_velocity(cusp, t);
  std::vector<CsvRow> rows;
  std::size_t k = 0;
  for (double n : cfg.numbers("eps-exponents")) {
    const auto c = qm_case(cfg, std::pow(2.0, -n));
    QmGridSpec g = c.grid();
    g.d_tilde = d_tilde;
    auto f = init_packet(g, c.potential(), c.packet());
    const auto snap = evolve_qm(f, {t}, false)[0];
    const auto& o = snap.obs;
    double crossings = kNaN, half_width = kNaN;
    try {
      const auto prof = env_phase_profile(f);
      crossings = decoherence_profile(f);
      half_width = prof.peak.half_width;
      std::vector<CsvRow> pr;
      for (std::size_t i = 0; i < prof.x.size(); ++i) {
        if (std::abs(prof.x[i]) <= xw) pr.push_back({fmt(prof.x[i]), fmt(prof.re_psi2[i]), fmt(prof.rho[i])});
      }
      w.csv(indexed("phase", k), {"x_tilde", "re_psi2", "rho"}, pr);
    } catch (const NotSplit&) {
    }
    rows.push_back({fmt(n), fmt(c.epsilon), fmt(static_cast<double>(f.size())), fmt(o.dx),
                    fmt(o.dp), fmt(o.x_left.x), fmt(o.x_right.x), fmt(o.p_left.x),
                    fmt(o.p_right.x), fmt(o.p_minus), fmt(o.p_plus), fmt(half_width),
                    fmt(crossings), fmt(xp), fmt(vp)});
    ++k;
  }
  w.csv("sweep.csv",
        {"n", "epsilon", "N", "dx", "dp", "x_peak_left", "x_peak_right", "p_peak_left",
         "p_peak_right", "p_minus", "p_plus", "half_width", "crossings", "x_plus", "v_plus"},
        rows);
  w.out.resolved["x_plus"] = xp;
  w.out.resolved["v_plus"] = vp;
}

void richardson_demo(const RunConfig& cfg, Writer& w) {
  const auto pot = cfg.potential();
  const double ell = positive(cfg, "ell"), mu = positive(cfg, "mu");
  const double shrink = positive(cfg, "shrink");
  const auto small = PotentialSpec::make(pot.kind(), pot.C(), pot.alpha(), ell / shrink);
  const auto taus = sorted_nonneg(cfg, "taus");
  std::vector<double> times;
  for (double tau : taus) times.push_back(tau * pot.time_unit());
  WavePacketSpec wp;
  wp.sigma = ell / mu;
  WavePacketSpec wps = wp;
  wps.sigma = wp.sigma / shrink;
  const auto big_ens = build_ensembles(pot, wp, times, {}, uncapped());
  const auto small_ens = build_ensembles(small, wps, times, {}, uncapped());
  const auto cusp = cusp_of(cfg);
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double d = dispersion(big_ens[k]);
    const double x2 = std::pow(extremal_position(cusp, times[k]), 2);
    rows.push_back({fmt(taus[k]), fmt(times[k]), fmt(d), fmt(dispersion(small_ens[k])), fmt(x2),
                    fmt(x2 > 0.0 ? d / x2 : kNaN)});
  }
  w.csv("dispersion.csv",
        {"tau", "t", "dispersion", "dispersion_shrunk", "x_plus_sq", "ratio"}, rows);

  const double eps_diss = positive(cfg, "eps-diss"), t_max = positive(cfg, "toy-t-max");
  std::vector<CsvRow> toy;
  for (double r0 : cfg.numbers("r0s")) {
    if (r0 < 0.0) throw ValidationError("r0s must not be negative");
    for (int i = 0; i <= 200; ++i) {
      const double t = t_max * i / 200.0;
      toy.push_back({fmt(r0), fmt(t), fmt(richardson_toy(r0, pot.C(), eps_diss, t))});
    }
  }
  w.csv("toy.csv", {"r0", "t", "r"}, toy);
}

// ---- gnuplot -----------------------------------------------------------------

std::string header(const std::string& name, int w = 900, int h = 600) {
  std::ostringstream s;
  s << "set terminal pngcairo size " << w << "," << h << "\n"
    << "set output '" << name << ".png'\n"
    << "set datafile separator comma\n"
    << "set key top right\n";
  return s.str();
}

std::size_t count_prefix(const std::vector<std::string>& files, const std::string& stem) {
  return std::count_if(files.begin(), files.end(), [&](const std::string& f) {
    return f.rfind(stem + "_", 0) == 0;
  });
}

std::string plot_wkb_evolve(const std::vector<std::string>& files) {
  const std::size_t n = count_prefix(files, "density");
  std::ostringstream s;
  s << header("density", 1000, 700) << "set multiplot layout " << (n + 1) / 2 << ",2\n"
    << "set xlabel 'x'\nset ylabel 'rho'\n";
  for (std::size_t k = 0; k < n; ++k) {
    s << "plot 'density_" << k << ".csv' every ::1 using 2:3 with lines lw 2 title 'WKB', \\\n"
      << "  'markers.csv' every ::" << k + 1 << "::" << k + 1
      << " using 3:(0) with points pt 3 ps 2 title '-x_+', \\\n"
      << "  'markers.csv' every ::" << k + 1 << "::" << k + 1
      << " using 4:(0) with points pt 3 ps 2 title 'x_+'\n";
  }
  s << "unset multiplot\n";
  return s.str();
}

std::string plot_wkb_scaling(const RunConfig& cfg, const std::vector<std::string>& files) {
  const auto ratios = cfg.numbers("ratios");
  std::ostringstream s;
  s << header("scaled") << "set xlabel 'x / x_+(t)'\nset ylabel 'x_+ rho'\nset logscale y\nplot ";
  for (std::size_t k = 0; k < count_prefix(files, "scaled"); ++k) {
    s << (k ? ", \\\n  " : "") << "'scaled_" << k << ".csv' every ::1 using 1:2 with lines title 'ell/x_+ = "
      << ratios[k] << "'";
  }
  s << "\n";
  return s.str();
}

std::string plot_splitting() {
  return header("splitting") +
         "set logscale xy\nset xlabel 'mu'\nset ylabel 'tau_c'\n"
         "plot 'splitting.csv' every ::1 using 1:2 with linespoints pt 7 title 'tau_c', \\\n"
         "  '' every ::1 using 1:6 with lines dt 2 title 'arccosh(mu)'\n";
}

std::string plot_bifurcation() {
  return header("bifurcation") +
         "set xlabel 'tau'\nset ylabel 'u_0'\n"
         "plot for [b=0:15] 'bifurcation.csv' every ::1 using 1:(($3 > 0 && $4 == b) ? $2 : 1/0) "
         "with lines lw 2 lc 'black' dt 1 notitle, \\\n"
         "  for [b=0:15] '' every ::1 using 1:(($3 < 0 && $4 == b) ? $2 : 1/0) "
         "with lines lw 2 lc 'black' dt 2 notitle\n";
}

std::string plot_scatter(const std::vector<std::string>& files) {
  const std::size_t n = count_prefix(files, "density");
  std::ostringstream s;
  s << header("scatter_density", 1000, 700) << "set multiplot layout " << (n + 1) / 2 << ",2\n"
    << "set xlabel 'x'\nset ylabel 'rho'\n";
  for (std::size_t k = 0; k < n; ++k) {
    s << "plot 'density_" << k << ".csv' every ::1 using 2:3 with lines lw 2 notitle\n";
  }
  s << "unset multiplot\n"
    << header("scatter_split")
    << "set xlabel 'tau'\nset ylabel 'probability'\nset yrange [0:1]\n"
       "plot 'snapshots.csv' every ::1 using 1:4 with linespoints title 'p_-', \\\n"
       "  '' every ::1 using 1:5 with linespoints title 'p_+'\n";
  return s.str();
}

std::string plot_qm_evolve(const std::vector<std::string>& files) {
  const std::size_t n = count_prefix(files, "psi");
  std::ostringstream s;
  s << header("qm_position", 1000, 700) << "set multiplot layout " << (n + 1) / 2 << ",2\n"
    << "set xlabel 'x'\nset ylabel '|psi|^2'\n";
  for (std::size_t k = 0; k < n; ++k) {
    s << "plot 'psi_" << k << ".csv' every ::1 using 1:4 with lines notitle\n";
  }
  s << "unset multiplot\n"
    << header("qm_momentum", 1000, 700) << "set multiplot layout " << (n + 1) / 2 << ",2\n"
    << "set xlabel 'p'\nset ylabel '|psi_hat|^2'\n";
  for (std::size_t k = 0; k < n; ++k) {
    s << "plot 'momentum_" << k << ".csv' every ::1 using 1:2 with lines notitle\n";
  }
  s << "unset multiplot\n";
  return s.str();
}

std::string plot_qm_sweep(const std::vector<std::string>& files) {
  std::ostringstream s;
  s << header("sweep_dispersion")
    << "set logscale x 2\nset xlabel 'epsilon'\nset ylabel 'dispersion'\n"
       "plot 'sweep.csv' every ::1 using 2:4 with linespoints pt 7 title 'dx', \\\n"
       "  '' every ::1 using 2:5 with linespoints pt 5 title 'dp', \\\n"
       "  '' every ::1 using 2:14 with lines dt 2 title 'x_+(t)', \\\n"
       "  '' every ::1 using 2:15 with lines dt 3 title 'v_+(t)'\n";
  const std::size_t n = count_prefix(files, "phase");
  if (n > 0) {
    s << header("sweep_phase", 1000, 700) << "unset logscale\nset multiplot layout " << (n + 1) / 2
      << ",2\nset xlabel 'x'\n";
    for (std::size_t k = 0; k < files.size(); ++k) {
      if (files[k].rfind("phase_", 0) != 0) continue;
      s << "plot '" << files[k] << "' every ::1 using 1:2 with lines title '|Re psi|^2', \\\n"
        << "  '' every ::1 using 1:3 with lines dt 2 title '|psi|^2'\n";
    }
    s << "unset multiplot\n";
  }
  return s.str();
}

std::string plot_richardson() {
  return header("richardson") +
         "set logscale xy\nset xlabel 't'\nset ylabel '<x^2>'\n"
         "plot 'dispersion.csv' every ::1 using 2:3 with linespoints pt 7 title 'WKB', \\\n"
         "  '' every ::1 using 2:4 with points pt 6 title 'ell, sigma shrunk', \\\n"
         "  '' every ::1 using 2:5 with lines dt 2 title 'x_+(t)^2'\n" +
         header("richardson_toy") +
         "unset logscale\nset xlabel 't'\nset ylabel 'r'\n"
         "plot 'toy.csv' every ::1 using 2:($1 == 0 ? $3 : 1/0) with lines lw 2 title 'r_0 = 0', \\\n"
         "  '' every ::1 using 2:($1 > 0 ? $3 : 1/0) with points pt 7 ps 0.4 title 'r_0 > 0'\n";
}

}  // namespace

RunOutput run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Writer w{out_dir, {}};
  switch (cfg.experiment()) {
    case Experiment::WkbEvolve: wkb_evolve(cfg, w); break;
    case Experiment::WkbScaling: wkb_scaling(cfg, w); break;
    case Experiment::SplittingTime: splitting_time_run(cfg, w); break;
    case Experiment::Bifurcation: bifurcation_run(cfg, w); break;
    case Experiment::Scatter: scatter_run(cfg, w); break;
    case Experiment::QmEvolve: qm_evolve(cfg, w); break;
    case Experiment::QmSweep: qm_sweep(cfg, w); break;
    case Experiment::RichardsonDemo: richardson_demo(cfg, w); break;
  }
  {
    std::ofstream m(out_dir / "manifest.json", std::ios::binary);
    m << manifest_json(cfg, w.out.resolved, w.out.csv_files);
    if (!m) throw Error("cannot write manifest.json");
  }
  std::ofstream p(out_dir / "plot.gp", std::ios::binary);
  p << plot_script(cfg, w.out.csv_files);
  if (!p) throw Error("cannot write plot.gp");
  return w.out;
}

std::string plot_script(const RunConfig& cfg, const std::vector<std::string>& csv_files) {
  std::string body;
  switch (cfg.experiment()) {
    case Experiment::WkbEvolve: body = plot_wkb_evolve(csv_files); break;
    case Experiment::WkbScaling: body = plot_wkb_scaling(cfg, csv_files); break;
    case Experiment::SplittingTime: body = plot_splitting(); break;
    case Experiment::Bifurcation: body = plot_bifurcation(); break;
    case Experiment::Scatter: body = plot_scatter(csv_files); break;
    case Experiment::QmEvolve: body = plot_qm_evolve(csv_files); break;
    case Experiment::QmSweep: body = plot_qm_sweep(csv_files); break;
    case Experiment::RichardsonDemo: body = plot_richardson(); break;
  }
  return "# " + std::string(to_string(cfg.experiment())) + ": run with gnuplot plot.gp\n" + body;
}

}  // namespace qss
