#include "qss/cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "qss/errors.hpp"

namespace qss {

namespace {

const std::map<Experiment, std::string_view> kNames = {
    {Experiment::WkbEvolve, "wkb-evolve"},         {Experiment::WkbScaling, "wkb-scaling"},
    {Experiment::SplittingTime, "splitting-time"}, {Experiment::Bifurcation, "bifurcation"},
    {Experiment::Scatter, "scatter"},              {Experiment::QmEvolve, "qm-evolve"},
    {Experiment::QmSweep, "qm-sweep"},             {Experiment::RichardsonDemo, "richardson-demo"},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t k = s.find(sep, start);
    out.push_back(trim(s.substr(start, k == std::string_view::npos ? k : k - start)));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

bool parse_ll(std::string_view s, long long& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

bool parse_plain_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty() && std::isfinite(out);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view what) {
  throw ValidationError(std::string(key) + " = '" + std::string(value) + "': " + std::string(what));
}

// Potential block shared by the classical and WKB experiments.
std::vector<KeyInfo> potential_keys(const std::string& kind, bool with_ell = true) {
  std::vector<KeyInfo> k = {
      {"potential", kind, "choice:cusp|kummer|spliced|inverted-oscillator|free", "potential kind"},
      {"alpha", "1/3", "rational", "Holder exponent, as p/q"},
      {"C", "1", "number", "cusp strength"},
  };
  if (with_ell) k.push_back({"ell", "1", "number", "inner length"});
  return k;
}

std::vector<KeyInfo> concat(std::vector<KeyInfo> a, const std::vector<KeyInfo>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<KeyInfo> kGridKeys = {
    {"n-f", "64", "integer", "WKB grid points per decade"},
    {"n-s", "-12", "integer", "smallest WKB offset, log10 of ell units"},
    {"n-b", "4", "integer", "largest WKB offset, log10 of ell units"},
};

const std::vector<KeyInfo> kQmKeys = {
    {"alpha", "1/3", "rational", "Holder exponent, as p/q"},
    {"beta", "1/2", "rational", "ell = eps^beta"},
    {"mu", "1", "number", "ell / sigma"},
    {"d-tilde", "128pi", "number", "periodic domain width"},
    {"x-window", "40", "number", "CSV rows only for |x| <= x-window"},
    {"p-window", "20", "number", "CSV rows only for |p| <= p-window"},
};

const std::map<Experiment, std::vector<KeyInfo>>& key_tables() {
  static const std::map<Experiment, std::vector<KeyInfo>> tables = {
      {Experiment::WkbEvolve,
       concat(concat(potential_keys("kummer"),
                     {{"mu", "1", "number", "ell / sigma"},
                      {"taus", "0,2.5,5,7.5", "list", "times in units of (ell^(1-alpha)/C)^(1/2)"},
                      {"mean-x", "0", "number", "packet mean, units of ell"},
                      {"mean-v", "0", "number", "packet mean velocity"}}),
              kGridKeys)},
      {Experiment::WkbScaling,
       concat(concat(potential_keys("kummer", false),
                     {{"mu", "1", "number", "ell / sigma"},
                      {"t", "1", "number", "fixed physical time"},
                      {"ratios", "4.35e-3,1e-5,1e-7,1e-9", "list", "ell / x_+(t)"}}),
              kGridKeys)},
      {Experiment::SplittingTime,
       concat(potential_keys("kummer"),
              {{"mu-grid", "log:1e-2,1e3,40", "list", "values of mu"},
               {"per-decade", "512", "integer", "u0 scan points per decade"},
               {"tau-max", "0", "number", "search horizon (0: 50 + 2 arccosh(mu))"}})},
      {Experiment::Bifurcation,
       concat(potential_keys("kummer"),
              {{"mu", "1", "number", "ell / sigma"},
               {"tau-max", "10", "number", "last time"},
               {"n-tau", "200", "integer", "number of times"},
               {"per-decade", "64", "integer", "u0 scan points per decade"}})},
      {Experiment::Scatter,
       concat(potential_keys("spliced"),
              {{"v-in", "20", "number", "incoming speed, units of (C ell^(1+alpha))^(1/2)"},
               {"tuning", "x-inf", "choice:x-inf|x-star|offset-kappa", "packet tuning"},
               {"kappa", "0", "number", "offset in sigmas (offset-kappa)"},
               {"beta", "1", "number", "width factor (x-star)"},
               {"mu", "1", "number", "ell / sigma (offset-kappa)"},
               {"self-consistent", "false", "flag", "Kummer: x_inf from its own energy balance"},
               {"taus", "0,5,10,15", "list", "times in units of (ell^(1-alpha)/C)^(1/2)"}})},
      {Experiment::QmEvolve,
       concat({{"potential", "kummer", "choice:kummer|inverted-oscillator|free", "potential kind"},
               {"C", "1", "number", "potential strength (Kummer uses C = 1)"},
               {"epsilon", "2^-7", "number", "dimensionless hbar"},
               {"times", "0,2,4,6", "list", "snapshot times"},
               {"n", "0", "integer", "grid points (0: automatic)"},
               {"dt", "0", "number", "time step (0: eps/16)"},
               {"precision", "double", "choice:double|extended", "FFT arithmetic"}},
              kQmKeys)},
      {Experiment::QmSweep,
       concat({{"eps-exponents", "1,6,8", "list", "n with eps = 2^-n"},
               {"t", "6", "number", "snapshot time"}},
              kQmKeys)},
      {Experiment::RichardsonDemo,
       concat(potential_keys("kummer"),
              {{"mu", "1", "number", "ell / sigma"},
               {"taus", "log:1,400,25", "list", "times in units of (ell^(1-alpha)/C)^(1/2)"},
               {"shrink", "10", "number", "second run with (ell, sigma) divided by this"},
               {"r0s", "0,0.1,1", "list", "toy-model initial separations"},
               {"eps-diss", "1", "number", "toy-model dissipation rate"},
               {"toy-t-max", "10", "number", "toy-model last time"}})},
  };
  return tables;
}

const KeyInfo* find_key(Experiment e, const std::string& key) {
  for (const auto& k : experiment_keys(e)) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

void validate_value(const KeyInfo& k, const std::string& v) {
  if (k.type == "number") {
    parse_number(v);
  } else if (k.type == "integer") {
    long long x;
    if (!parse_ll(v, x)) bad_value(k.key, v, "not an integer");
  } else if (k.type == "rational") {
    parse_rational(v);
  } else if (k.type == "list") {
    parse_number_list(v);
  } else if (k.type == "flag") {
    if (v != "true" && v != "false") bad_value(k.key, v, "expected true or false");
  } else if (k.type.rfind("choice:", 0) == 0) {
    const auto opts = split(std::string_view(k.type).substr(7), '|');
    if (std::find(opts.begin(), opts.end(), v) == opts.end()) {
      bad_value(k.key, v, "expected one of " + k.type.substr(7));
    }
  }
}

}  // namespace

std::string_view to_string(Experiment e) { return kNames.at(e); }

Experiment experiment_from_string(std::string_view name) {
  for (const auto& [e, n] : kNames) {
    if (n == name) return e;
  }
  throw ValidationError("unknown experiment '" + std::string(name) + "'");
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    for (const auto& [e, n] : kNames) v.push_back(e);
    return v;
  }();
  return all;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational parse_rational(std::string_view s) {
  s = trim(s);
  Rational r;
  const std::size_t slash = s.find('/');
  if (slash != std::string_view::npos) {
    if (!parse_ll(s.substr(0, slash), r.num) || !parse_ll(s.substr(slash + 1), r.den)) {
      throw ValidationError("'" + std::string(s) + "' is not a fraction p/q");
    }
  } else {
    const std::size_t dot = s.find('.');
    std::string digits(s);
    long long den = 1;
    if (dot != std::string_view::npos) {
      const std::size_t frac = s.size() - dot - 1;
      if (frac > 15) throw ValidationError("'" + std::string(s) + "' has too many decimals");
      digits.erase(dot, 1);
      for (std::size_t i = 0; i < frac; ++i) den *= 10;
    }
    if (!parse_ll(digits, r.num)) {
      throw ValidationError("'" + std::string(s) + "' is not a rational number");
    }
    r.den = den;
  }
  if (r.den == 0) throw ValidationError("zero denominator in '" + std::string(s) + "'");
  if (r.den < 0) r.num = -r.num, r.den = -r.den;
  const long long g = std::gcd(r.num < 0 ? -r.num : r.num, r.den);
  if (g > 1) r.num /= g, r.den /= g;
  return r;
}

double parse_number(std::string_view s) {
  s = trim(s);
  double scale = 1.0;
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    s = trim(s.substr(0, s.size() - 2));
    scale = std::numbers::pi;
    if (s.empty()) return scale;
  }
  double x;
  if (parse_plain_double(s, x)) return x * scale;
  const std::size_t caret = s.find('^');
  if (caret != std::string_view::npos) {
    double b, e;
    if (parse_plain_double(s.substr(0, caret), b) && parse_plain_double(s.substr(caret + 1), e)) {
      const double v = std::pow(b, e) * scale;
      if (std::isfinite(v)) return v;
    }
  } else if (s.find('/') != std::string_view::npos) {
    return parse_rational(s).value() * scale;
  }
  throw ValidationError("'" + std::string(s) + "' is not a number");
}

std::vector<double> parse_number_list(std::string_view s) {
  s = trim(s);
  for (std::string_view kind : {"log:", "lin:"}) {
    if (s.rfind(kind, 0) != 0) continue;
    const auto parts = split(s.substr(4), ',');
    long long n;
    if (parts.size() != 3 || !parse_ll(parts[2], n) || n < 1) {
      throw ValidationError("'" + std::string(s) + "' must be " + std::string(kind) + "a,b,n");
    }
    const double a = parse_number(parts[0]), b = parse_number(parts[1]);
    if (kind == "log:" && !(a > 0.0 && b > 0.0)) {
      throw ValidationError("log range needs positive ends");
    }
    std::vector<double> out;
    for (long long i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      if (kind == "log:") {
        out.push_back(std::pow(10.0, std::log10(a) + f * (std::log10(b) - std::log10(a))));
      } else {
        out.push_back(a + f * (b - a));
      }
    }
    if (n > 1) out.back() = b;
    return out;
  }
  std::vector<double> out;
  if (s.empty()) throw ValidationError("empty list");
  for (auto p : split(s, ',')) out.push_back(parse_number(p));
  return out;
}

KeyValues parse_config_text(std::string_view text) {
  KeyValues kv;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (trim(text).rfind('{', 0) != 0) return parse_config_text(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) {
    throw ValidationError(path.string() + ": manifest has no config object");
  }
  KeyValues kv;
  for (const auto& [k, v] : j["config"].items()) {
    if (!v.is_string()) throw ValidationError(path.string() + ": config value of " + k);
    kv[k] = v.get<std::string>();
  }
  return kv;
}

const std::vector<KeyInfo>& experiment_keys(Experiment e) { return key_tables().at(e); }

RunConfig RunConfig::resolve(const KeyValues& given) {
  const auto it = given.find("experiment");
  if (it == given.end() || it->second.empty()) throw ValidationError("no experiment given");
  RunConfig cfg;
  cfg.experiment_ = experiment_from_string(it->second);
  cfg.values_["experiment"] = it->second;
  cfg.values_["out"] = "run-" + it->second;
  for (const auto& k : experiment_keys(cfg.experiment_)) cfg.values_[k.key] = k.default_value;
  for (const auto& [key, value] : given) {
    if (key == "experiment") continue;
    if (key == "out") {
      if (value.empty()) throw ValidationError("out must not be empty");
      cfg.values_[key] = value;
      continue;
    }
    const KeyInfo* info = find_key(cfg.experiment_, key);
    if (!info) {
      throw ValidationError("key '" + key + "' does not apply to " + it->second);
    }
    validate_value(*info, value);
    cfg.values_[key] = value;
  }
  if (cfg.values_.count("potential")) {
    try {
      cfg.potential();
    } catch (const DomainError& e) {
      throw ValidationError(e.what());
    }
  }
  return cfg;
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("missing key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const { return parse_number(text(key)); }

long long RunConfig::integer(const std::string& key) const {
  long long x;
  if (!parse_ll(text(key), x)) bad_value(key, text(key), "not an integer");
  return x;
}

bool RunConfig::flag(const std::string& key) const { return text(key) == "true"; }

Rational RunConfig::rational(const std::string& key) const { return parse_rational(text(key)); }

std::vector<double> RunConfig::numbers(const std::string& key) const {
  return parse_number_list(text(key));
}

PotentialSpec RunConfig::potential() const {
  std::string name = values_.count("potential") ? text("potential") : "kummer";
  std::replace(name.begin(), name.end(), '-', '_');
  const double ell = values_.count("ell") ? number("ell") : 1.0;
  const double alpha = values_.count("alpha") ? rational("alpha").value() : 1.0 / 3.0;
  const double C = values_.count("C") ? number("C") : 1.0;
  return PotentialSpec::make(potential_kind_from_string(name), C, alpha, ell);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!out) throw Error("write failed for " + path.string());
}

std::string manifest_json(const RunConfig& cfg, const std::map<std::string, double>& resolved,
                          const std::vector<std::string>& files) {
  nlohmann::json j;
  j["schema"] = kManifestSchema;
  j["experiment"] = std::string(to_string(cfg.experiment()));
  j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : cfg.values()) j["config"][k] = v;
  j["resolved"] = nlohmann::json::object();
  for (const auto& [k, v] : resolved) j["resolved"][k] = v;
  j["files"] = files;
  return j.dump(2) + "\n";
}

std::filesystem::path emit_plots(const std::filesystem::path& run_dir) {
  const auto manifest = run_dir / "manifest.json";
  if (!std::filesystem::exists(manifest)) {
    throw MissingArtifact(manifest.string() + " not found");
  }
  std::ifstream in(manifest, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifact(manifest.string() + " is not a manifest: " + e.what());
  }
  std::vector<std::string> files;
  for (const auto& f : j.at("files")) {
    files.push_back(f.get<std::string>());
    if (!std::filesystem::exists(run_dir / files.back())) {
      throw MissingArtifact((run_dir / files.back()).string() + " not found");
    }
  }
  const RunConfig cfg = RunConfig::resolve(read_config_file(manifest));
  const auto out = run_dir / "plot.gp";
  std::ofstream o(out, std::ios::binary);
  o << plot_script(cfg, files);
  if (!o) throw Error("cannot write " + out.string());
  return out;
}

}  // namespace qss
