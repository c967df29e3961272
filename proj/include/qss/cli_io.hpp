#pragma once

// Run configuration, CSV/JSON output and gnuplot scripts behind the qss
// command. A run is a flat set of key = value pairs; every run directory gets
// its CSVs, a manifest.json echoing the resolved configuration, and plot.gp.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qss/potentials.hpp"

namespace qss {

enum class Experiment {
  WkbEvolve,
  WkbScaling,
  SplittingTime,
  Bifurcation,
  Scatter,
  QmEvolve,
  QmSweep,
  RichardsonDemo
};

std::string_view to_string(Experiment e);
/// "wkb-evolve", "splitting-time", ...; throws ValidationError.
Experiment experiment_from_string(std::string_view name);
const std::vector<Experiment>& all_experiments();

/// p/q kept exactly until value() divides once.
struct Rational {
  long long num = 0;
  long long den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
};

/// "1/3", "-2", or a terminating decimal such as "0.25" (-> 1/4).
Rational parse_rational(std::string_view s);

/// Decimal, p/q, b^e (e.g. 2^-7) or any of those followed by "pi".
double parse_number(std::string_view s);

/// Comma-separated numbers, or "log:a,b,n" / "lin:a,b,n" for n points from a to b.
std::vector<double> parse_number_list(std::string_view s);

using KeyValues = std::map<std::string, std::string>;

/// "key = value" per line, '#' starts a comment. Throws ValidationError on a
/// malformed line or a repeated key.
KeyValues parse_config_text(std::string_view text);

/// A key-value file, or the manifest.json of an earlier run.
KeyValues read_config_file(const std::filesystem::path& path);

/// type: number, integer, rational, list, flag, or choice:a|b|c.
struct KeyInfo {
  std::string key;
  std::string default_value;
  std::string type;
  std::string help;
};

/// Keys accepted by an experiment (besides "experiment" and "out"), with defaults.
const std::vector<KeyInfo>& experiment_keys(Experiment e);

class RunConfig {
 public:
  /// Defaults overlaid with `given`, which must name the experiment. Unknown
  /// keys and values that do not parse raise ValidationError.
  static RunConfig resolve(const KeyValues& given);

  Experiment experiment() const { return experiment_; }
  /// Every key of the experiment, defaults included, plus "experiment" and "out".
  const KeyValues& values() const { return values_; }

  const std::string& text(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  Rational rational(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  /// From potential, C, alpha and ell (ell = 1 if the experiment has no ell key).
  PotentialSpec potential() const;

 private:
  Experiment experiment_ = Experiment::WkbEvolve;
  KeyValues values_;
};

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

using CsvRow = std::vector<std::string>;

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows);

inline constexpr int kManifestSchema = 1;

/// {"schema", "experiment", "config", "resolved", "files"}. `resolved` holds
/// derived quantities (grid sizes, steps) that the config does not spell out.
std::string manifest_json(const RunConfig& cfg, const std::map<std::string, double>& resolved,
                          const std::vector<std::string>& files);

struct RunOutput {
  std::vector<std::string> csv_files;  // relative to the run directory
  std::map<std::string, double> resolved;
};

/// Runs the experiment and writes its CSVs, manifest.json and plot.gp to
/// out_dir (created if needed). Library errors propagate unchanged.
RunOutput run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Rewrites plot.gp of a run directory from its manifest. Throws
/// MissingArtifact if the manifest or one of its CSVs is absent.
std::filesystem::path emit_plots(const std::filesystem::path& run_dir);

/// The gnuplot script for a run (what emit_plots writes).
std::string plot_script(const RunConfig& cfg, const std::vector<std::string>& csv_files);

}  // namespace qss
