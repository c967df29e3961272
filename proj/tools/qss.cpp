// qss: runs one experiment and writes CSVs, manifest.json and plot.gp.
//
//   qss wkb-evolve --taus 0,5,10 --out run1
//   qss qm-evolve --config base.cfg --epsilon 2^-6
//   qss run run1/manifest.json --out rerun
//   qss plots run1
//
// Exit status: 0 success, 2 invalid configuration, 3 numerical failure.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "qss/cli_io.hpp"
#include "qss/errors.hpp"

namespace {

struct Sub {
  CLI::App* app;
  qss::Experiment experiment;
  std::map<std::string, std::string> flags;
  std::string config;
  std::string out;
};

int execute(qss::KeyValues kv, const std::string& out) {
  if (!out.empty()) kv["out"] = out;
  const auto cfg = qss::RunConfig::resolve(kv);
  const auto dir = cfg.text("out");
  const auto result = qss::run_experiment(cfg, dir);
  std::cout << dir << ": " << result.csv_files.size() << " csv files\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum spontaneous stochasticity experiments"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Sub>> subs;
  for (auto e : qss::all_experiments()) {
    auto s = std::make_unique<Sub>();
    s->experiment = e;
    s->app = app.add_subcommand(std::string(qss::to_string(e)), "run " + std::string(qss::to_string(e)));
    s->app->add_option("--config", s->config, "key = value file or manifest.json");
    s->app->add_option("--out", s->out, "output directory");
    for (const auto& k : qss::experiment_keys(e)) {
      s->app->add_option("--" + k.key, s->flags[k.key], k.help + " [" + k.default_value + "]")
          ->allow_extra_args(false);
    }
    subs.push_back(std::move(s));
  }

  std::string run_file, run_out;
  auto* run = app.add_subcommand("run", "rerun from a config file or manifest.json");
  run->add_option("file", run_file, "config file")->required();
  run->add_option("--out", run_out, "output directory");

  std::string plot_dir;
  auto* plots = app.add_subcommand("plots", "regenerate plot.gp of a run directory");
  plots->add_option("dir", plot_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return execute(qss::read_config_file(run_file), run_out);
    if (plots->parsed()) {
      std::cout << qss::emit_plots(plot_dir).string() << "\n";
      return 0;
    }
    for (const auto& s : subs) {
      if (!s->app->parsed()) continue;
      qss::KeyValues kv;
      if (!s->config.empty()) kv = qss::read_config_file(s->config);
      const std::string name(qss::to_string(s->experiment));
      if (kv.count("experiment") && kv["experiment"] != name) {
        throw qss::ValidationError(s->config + " is for experiment " + kv["experiment"]);
      }
      kv["experiment"] = name;
      for (const auto& [key, value] : s->flags) {
        if (s->app->count("--" + key) > 0) kv[key] = value;
      }
      return execute(kv, s->out);
    }
  } catch (const qss::ValidationError& e) {
    std::cerr << "qss: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "qss: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
