#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "qss/cli_io.hpp"
#include "qss/errors.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::current_path() / "cli_io_runs" / name;
  fs::remove_all(d);
  return d;
}

qss::RunConfig config(qss::KeyValues kv) { return qss::RunConfig::resolve(kv); }

// Runs cfg twice into separate directories and once more from the first
// manifest; all CSVs must agree byte for byte.
void check_reproducible(const qss::KeyValues& kv, const std::string& name) {
  const auto a = fresh_dir(name + "_a"), b = fresh_dir(name + "_b"), c = fresh_dir(name + "_c");
  const auto cfg = config(kv);
  const auto out_a = qss::run_experiment(cfg, a);
  const auto out_b = qss::run_experiment(cfg, b);
  auto from_manifest = qss::read_config_file(a / "manifest.json");
  const auto out_c = qss::run_experiment(qss::RunConfig::resolve(from_manifest), c);
  REQUIRE(!out_a.csv_files.empty());
  CHECK(out_a.csv_files == out_b.csv_files);
  CHECK(out_a.csv_files == out_c.csv_files);
  for (const auto& f : out_a.csv_files) {
    const std::string bytes = slurp(a / f);
    CHECK(!bytes.empty());
    CHECK(bytes == slurp(b / f));
    CHECK(bytes == slurp(c / f));
  }
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(slurp(a / "plot.gp") == slurp(c / "plot.gp"));
}

}  // namespace

TEST_CASE("experiment names") {
  for (auto e : qss::all_experiments()) {
    CHECK(qss::experiment_from_string(qss::to_string(e)) == e);
  }
  CHECK(qss::all_experiments().size() == 8);
  CHECK_THROWS_AS(qss::experiment_from_string("wkb"), qss::ValidationError);
}

TEST_CASE("rationals are parsed exactly") {
  auto r = qss::parse_rational("1/3");
  CHECK(r.num == 1);
  CHECK(r.den == 3);
  CHECK(r.value() == 1.0 / 3.0);
  r = qss::parse_rational(" 2/6 ");
  CHECK(r.num == 1);
  CHECK(r.den == 3);
  r = qss::parse_rational("0.25");
  CHECK(r.num == 1);
  CHECK(r.den == 4);
  r = qss::parse_rational("3/-4");
  CHECK(r.num == -3);
  CHECK(r.den == 4);
  CHECK(qss::parse_rational("-2").str() == "-2");
  CHECK(qss::parse_rational("1/3").str() == "1/3");
  CHECK_THROWS_AS(qss::parse_rational("1/0"), qss::ValidationError);
  CHECK_THROWS_AS(qss::parse_rational("third"), qss::ValidationError);
  CHECK_THROWS_AS(qss::parse_rational("1/3/4"), qss::ValidationError);
}

TEST_CASE("numbers") {
  CHECK(qss::parse_number("2^-7") == 1.0 / 128.0);
  CHECK(qss::parse_number("2^10") == 1024.0);
  CHECK(qss::parse_number("128pi") == 128.0 * M_PI);
  CHECK(qss::parse_number("pi") == M_PI);
  CHECK(qss::parse_number("1e-3") == 1e-3);
  CHECK(qss::parse_number("-1.5") == -1.5);
  CHECK(qss::parse_number("+4") == 4.0);
  CHECK(qss::parse_number("1/3") == 1.0 / 3.0);
  for (const char* bad : {"", "abc", "1e", "2^", "nan", "inf", "1,2", "10^400"}) {
    CHECK_THROWS_AS(qss::parse_number(bad), qss::ValidationError);
  }
}

TEST_CASE("number lists") {
  CHECK(qss::parse_number_list("-1,0,1,2") == std::vector<double>{-1.0, 0.0, 1.0, 2.0});
  CHECK(qss::parse_number_list("0, 2.5 ,5") == std::vector<double>{0.0, 2.5, 5.0});
  const auto lg = qss::parse_number_list("log:1e-2,1e3,40");
  REQUIRE(lg.size() == 40);
  CHECK(lg.front() == doctest::Approx(1e-2).epsilon(1e-15));
  CHECK(lg.back() == 1e3);
  for (std::size_t i = 1; i < lg.size(); ++i) {
    CHECK(std::log10(lg[i] / lg[i - 1]) == doctest::Approx(5.0 / 39.0).epsilon(1e-12));
  }
  CHECK(qss::parse_number_list("lin:0,1,5") == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(qss::parse_number_list("lin:3,4,1") == std::vector<double>{3.0});
  for (const char* bad : {"", "1,,2", "log:0,1,5", "lin:0,1", "lin:0,1,0", "log:1,2,x"}) {
    CHECK_THROWS_AS(qss::parse_number_list(bad), qss::ValidationError);
  }
}

TEST_CASE("key-value text") {
  const auto kv = qss::parse_config_text(
      "# four snapshots\nexperiment = wkb-evolve\n\n  alpha=1/3   # exact\ntaus = 0, 2.5\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("experiment") == "wkb-evolve");
  CHECK(kv.at("alpha") == "1/3");
  CHECK(kv.at("taus") == "0, 2.5");
  CHECK(qss::parse_config_text("").empty());
  CHECK(qss::parse_config_text("# only a comment\n").empty());
  CHECK_THROWS_AS(qss::parse_config_text("alpha 1/3"), qss::ValidationError);
  CHECK_THROWS_AS(qss::parse_config_text("= 3"), qss::ValidationError);
  CHECK_THROWS_AS(qss::parse_config_text("mu = 1\nmu = 2"), qss::ValidationError);
}

TEST_CASE("resolved config") {
  const auto cfg = config({{"experiment", "wkb-evolve"}, {"mu", "2"}});
  CHECK(cfg.experiment() == qss::Experiment::WkbEvolve);
  for (const auto& k : qss::experiment_keys(qss::Experiment::WkbEvolve)) {
    CHECK(cfg.values().count(k.key) == 1);
  }
  CHECK(cfg.values().size() == qss::experiment_keys(qss::Experiment::WkbEvolve).size() + 2);
  CHECK(cfg.number("mu") == 2.0);
  CHECK(cfg.text("taus") == "0,2.5,5,7.5");
  CHECK(cfg.text("out") == "run-wkb-evolve");
  CHECK(cfg.rational("alpha").value() == 1.0 / 3.0);
  CHECK(cfg.potential().kind() == qss::PotentialKind::Kummer);
  CHECK(cfg.potential().alpha() == 1.0 / 3.0);

  // every default resolves to a valid value
  for (auto e : qss::all_experiments()) {
    CHECK_NOTHROW(config({{"experiment", std::string(qss::to_string(e))}}));
  }

  using KV = qss::KeyValues;
  for (const KV& bad : {KV{}, KV{{"experiment", ""}}, KV{{"experiment", "nope"}},
                        KV{{"mu", "1"}},
                        KV{{"experiment", "wkb-evolve"}, {"epsilon", "1"}},
                        KV{{"experiment", "wkb-evolve"}, {"mu", "x"}},
                        KV{{"experiment", "wkb-evolve"}, {"potential", "square"}},
                        KV{{"experiment", "wkb-evolve"}, {"alpha", "0.3333333333333333333"}},
                        KV{{"experiment", "wkb-evolve"}, {"alpha", "3/2"}},
                        KV{{"experiment", "wkb-evolve"}, {"n-f", "1.5"}},
                        KV{{"experiment", "wkb-evolve"}, {"out", ""}},
                        KV{{"experiment", "scatter"}, {"self-consistent", "yes"}},
                        KV{{"experiment", "qm-evolve"}, {"precision", "quad"}}}) {
    CHECK_THROWS_AS(qss::RunConfig::resolve(bad), qss::ValidationError);
  }
}

TEST_CASE("17 significant digits round-trip") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 20000; ++i) {
    const double x = std::ldexp(mant(rng), expo(rng));
    CHECK(std::strtod(qss::format_double(x).c_str(), nullptr) == x);
  }
  CHECK(qss::format_double(0.1) == "0.10000000000000001");
  CHECK(qss::format_double(std::nan("")) == "nan");
  CHECK(qss::format_double(-INFINITY) == "-inf");
}

TEST_CASE("manifest schema") {
  const auto cfg = config({{"experiment", "qm-evolve"}, {"epsilon", "2^-3"}});
  const auto j = nlohmann::json::parse(qss::manifest_json(cfg, {{"N", 4096.0}}, {"psi_0.csv"}));
  CHECK(j.at("schema") == qss::kManifestSchema);
  CHECK(j.at("experiment") == "qm-evolve");
  CHECK(j.at("resolved").at("N") == 4096.0);
  CHECK(j.at("files") == nlohmann::json::array({"psi_0.csv"}));
  CHECK(j.at("config").size() == cfg.values().size());
  for (const auto& [k, v] : cfg.values()) CHECK(j.at("config").at(k) == v);
}

TEST_CASE("manifest re-runs reproduce CSVs byte for byte") {
  check_reproducible({{"experiment", "wkb-evolve"}, {"n-f", "16"}}, "wkb_evolve");
  check_reproducible({{"experiment", "wkb-scaling"}, {"n-f", "16"}, {"ratios", "1e-3,1e-5"}},
                     "wkb_scaling");
  check_reproducible({{"experiment", "splitting-time"},
                      {"potential", "spliced"},
                      {"mu-grid", "1,10"},
                      {"per-decade", "64"}},
                     "splitting");
  check_reproducible({{"experiment", "bifurcation"}, {"n-tau", "8"}, {"per-decade", "32"}},
                     "bifurcation");
  check_reproducible({{"experiment", "scatter"}}, "scatter");
  check_reproducible({{"experiment", "qm-evolve"}, {"epsilon", "1"}, {"times", "0,1,2"}},
                     "qm_evolve");
  check_reproducible({{"experiment", "qm-sweep"}, {"eps-exponents", "-1,0"}}, "qm_sweep");
  check_reproducible({{"experiment", "richardson-demo"}, {"taus", "1,10,40"}}, "richardson");
}

TEST_CASE("CSV content") {
  const auto d = fresh_dir("content");
  const auto out = qss::run_experiment(
      config({{"experiment", "qm-evolve"}, {"epsilon", "1"}, {"times", "0,1"}}), d);
  CHECK(out.csv_files == std::vector<std::string>{"psi_0.csv", "momentum_0.csv", "psi_1.csv",
                                                 "momentum_1.csv", "observables.csv"});
  CHECK(out.resolved.at("N") == 2048.0);
  CHECK(out.resolved.at("dt") == 1.0 / 16.0);
  std::ifstream in(d / "observables.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "t,norm,mean_x,dx,mean_p,dp,p_minus,p_plus,x_peak_left,x_peak_right,p_peak_left,"
        "p_peak_right");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("1,", 0) == 0);

  // psi rows honour the x window
  std::ifstream psi(d / "psi_0.csv");
  std::getline(psi, line);
  CHECK(line == "x_tilde,re_psi,im_psi,rho");
  std::size_t rows = 0;
  while (std::getline(psi, line)) {
    CHECK(std::abs(std::strtod(line.c_str(), nullptr)) <= 40.0);
    ++rows;
  }
  CHECK(rows > 100);
}

TEST_CASE("config files") {
  const auto d = fresh_dir("files");
  fs::create_directories(d);
  {
    std::ofstream(d / "a.cfg") << "experiment = bifurcation\nn-tau = 4\n";
    std::ofstream(d / "empty.cfg") << "";
    std::ofstream(d / "bad.json") << "{\"schema\": 1}";
  }
  const auto kv = qss::read_config_file(d / "a.cfg");
  CHECK(kv.at("n-tau") == "4");
  CHECK(qss::read_config_file(d / "empty.cfg").empty());
  CHECK_THROWS_AS(qss::RunConfig::resolve(qss::read_config_file(d / "empty.cfg")),
                  qss::ValidationError);
  CHECK_THROWS_AS(qss::read_config_file(d / "bad.json"), qss::ValidationError);
  CHECK_THROWS_AS(qss::read_config_file(d / "missing.cfg"), qss::ValidationError);
}

TEST_CASE("plot scripts") {
  const auto d = fresh_dir("plots");
  CHECK_THROWS_AS(qss::emit_plots(d), qss::MissingArtifact);
  qss::run_experiment(config({{"experiment", "wkb-evolve"}, {"n-f", "16"}}), d);
  const std::string written = slurp(d / "plot.gp");
  fs::remove(d / "plot.gp");
  CHECK(qss::emit_plots(d) == d / "plot.gp");
  CHECK(slurp(d / "plot.gp") == written);
  // four panels, with abscissa markers at -x_+ and x_+
  CHECK(written.find("layout 2,2") != std::string::npos);
  CHECK(written.find("density_3.csv") != std::string::npos);
  CHECK(written.find("pt 3") != std::string::npos);
  CHECK(written.find("using 4:(0)") != std::string::npos);

  fs::remove(d / "density_2.csv");
  CHECK_THROWS_AS(qss::emit_plots(d), qss::MissingArtifact);

  const auto bif = qss::plot_script(config({{"experiment", "bifurcation"}}), {"bifurcation.csv"});
  CHECK(bif.find("dt 1") != std::string::npos);
  CHECK(bif.find("dt 2") != std::string::npos);
  const auto sweep = qss::plot_script(config({{"experiment", "qm-sweep"}}), {"sweep.csv"});
  CHECK(sweep.find("set logscale") != std::string::npos);
  CHECK(sweep.find("x_+(t)") != std::string::npos);
}
