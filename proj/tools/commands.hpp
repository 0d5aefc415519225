// Apache License, Version 2.0, refer to LICENSE.txt

// Configuration resolution and the four subcommands of the bnp tool.

#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bnp/exact_posterior.hpp"
#include "bnp/generate.hpp"
#include "bnp/gibbs.hpp"
#include "bnp/io.hpp"
#include "bnp/verify.hpp"
#include "json.hpp"

namespace bnp::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode { kOk = 0, kUsage = 1, kDomain = 2, kCapacity = 3, kVerifyFailed = 4 };

using Settings = std::map<std::string, std::string>;

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "preset",         "input",          "generator.kind",       "generator.n",
      "generator.mean", "generator.sd",   "generator.intervals",  "generator.weights",
      "generator.means", "generator.alpha", "generator.theta_sd", "generator.obs_sd",
      "model.alpha",    "model.discount", "prior.kind",           "prior.sigma2",
      "prior.lo",       "prior.hi",       "gibbs.burn_in",        "gibbs.samples",
      "gibbs.thin",     "gibbs.init",     "gibbs.chains",         "gibbs.shuffle",
      "gibbs.support_floor", "seed",      "exact.limit",          "exact.allow_outside_support",
      "threads"};
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void set_checked(Settings& out, const std::string& key, const std::string& value) {
  if (!known_keys().count(key)) throw UsageError("unknown config key '" + key + "'");
  out[key] = value;
}

// Parses "key=value" assignments, one per line; '#' starts a comment line.
inline Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    set_checked(out, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline Settings parse_assignment(const std::string& assignment) {
  return parse_settings(assignment, "--set");
}

inline int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline Settings defaults() {
  return {{"model.alpha", "1"},
          {"model.discount", "0"},
          {"prior.kind", "gaussian"},
          {"prior.sigma2", "1"},
          {"prior.lo", "-10"},
          {"prior.hi", "10"},
          {"gibbs.burn_in", "20000"},
          {"gibbs.samples", "2000"},
          {"gibbs.thin", "20"},
          {"gibbs.init", "sequential-seating"},
          {"gibbs.chains", "1"},
          {"gibbs.shuffle", "false"},
          {"gibbs.support_floor", std::to_string(kDefaultSupportFloor)},
          {"seed", "0"},
          {"exact.limit", std::to_string(kDefaultEnumerationLimit)},
          {"exact.allow_outside_support", "false"},
          {"threads", std::to_string(default_threads())}};
}

inline Settings paper_budget() {
  return {{"gibbs.burn_in", "200000"}, {"gibbs.samples", "10000"}, {"gibbs.thin", "100"}};
}

// Generator and model settings of the named experiment preset.
inline Settings preset_settings(const std::string& name) {
  Settings out;
  for (const auto& [k, v] : preset_generator(name).describe()) {
    if (k != "seed") out[k] = v;
  }
  if (name == "dp-generative") {
    out["model.alpha"] = "3";
    out["prior.sigma2"] = "25";
  } else {
    out["model.alpha"] = "1";
    out["prior.sigma2"] = "1";
  }
  out["prior.kind"] = "gaussian";
  return out;
}

inline void overlay(Settings& base, const Settings& top) {
  for (const auto& [k, v] : top) base[k] = v;
}

// defaults < preset < config file < command line.
inline Settings layer(const Settings& file, const Settings& command_line) {
  Settings merged = defaults();
  std::string preset;
  if (auto it = file.find("preset"); it != file.end()) preset = it->second;
  if (auto it = command_line.find("preset"); it != command_line.end()) preset = it->second;
  if (!preset.empty()) overlay(merged, preset_settings(preset));
  overlay(merged, file);
  overlay(merged, command_line);
  if (const char* env = std::getenv("BNP_THREADS"); env != nullptr && *env != '\0') merged["threads"] = env;
  return merged;
}

struct ResolvedConfig {
  Settings settings;
  std::optional<std::filesystem::path> input;
  std::optional<GeneratorSpec> generator;
  MixtureModel model{PitmanYorParams(1.0), ComponentPrior::gaussian(1.0)};
  GibbsConfig gibbs;
  int chains = 1;
  long support_floor = kDefaultSupportFloor;
  ExactOptions exact;
  int threads = 1;
  KeyValues echo;
};

namespace detail {

inline double number(const Settings& s, const std::string& key) {
  try {
    return parse_double(s.at(key));
  } catch (const ValidationError&) {
    throw UsageError("config key " + key + ": not a number: '" + s.at(key) + "'");
  }
}

inline long integer(const Settings& s, const std::string& key) {
  const std::string& text = s.at(key);
  long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("config key " + key + ": not an integer: '" + text + "'");
  }
  return value;
}

inline std::uint64_t unsigned_integer(const Settings& s, const std::string& key) {
  const std::string& text = s.at(key);
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("config key " + key + ": not a nonnegative integer: '" + text + "'");
  }
  return value;
}

inline bool boolean(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key " + key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> number_list(const Settings& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s.at(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

inline std::string get_or(const Settings& s, const std::string& key, const std::string& fallback) {
  const auto it = s.find(key);
  return it == s.end() ? fallback : it->second;
}

inline GeneratorSpec generator_from(const Settings& s) {
  GeneratorSpec spec;
  const std::string kind = s.at("generator.kind");
  const Settings& g = s;
  if (kind == "gaussian-iid") {
    spec.variant = GaussianIID{parse_double(get_or(g, "generator.mean", "0")), parse_double(get_or(g, "generator.sd", "1"))};
  } else if (kind == "uniform-union") {
    UniformUnion u;
    std::stringstream ss(get_or(g, "generator.intervals", "0:1,2:3"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ValidationError("interval '" + item + "' must be lo:hi");
      u.intervals.emplace_back(parse_double(item.substr(0, colon)), parse_double(item.substr(colon + 1)));
    }
    spec.variant = u;
  } else if (kind == "finite-mixture") {
    if (!s.count("generator.weights") || !s.count("generator.means")) {
      throw UsageError("finite-mixture needs generator.weights and generator.means");
    }
    spec.variant = FiniteMixture{number_list(s, "generator.weights"), number_list(s, "generator.means"),
                                 parse_double(get_or(g, "generator.sd", "1"))};
  } else if (kind == "crp") {
    spec.variant = CRPGenerative{parse_double(get_or(g, "generator.alpha", "3")),
                                 parse_double(get_or(g, "generator.theta_sd", "5")),
                                 parse_double(get_or(g, "generator.obs_sd", "1"))};
  } else {
    throw UsageError("unknown generator.kind '" + kind + "'");
  }
  if (!s.count("generator.n")) throw UsageError("generator.n is required");
  spec.n = static_cast<int>(integer(s, "generator.n"));
  spec.seed = unsigned_integer(s, "seed");
  spec.validate();
  return spec;
}

}  // namespace detail

inline ResolvedConfig resolve(const Settings& settings) {
  ResolvedConfig cfg;
  cfg.settings = settings;
  const Settings& s = settings;
  if (s.count("input")) {
    cfg.input = s.at("input");
  } else if (s.count("generator.kind")) {
    cfg.generator = detail::generator_from(s);
  }

  const PitmanYorParams params(detail::number(s, "model.alpha"), detail::number(s, "model.discount"));
  const std::string prior_kind = s.at("prior.kind");
  if (prior_kind == "gaussian") {
    cfg.model = {params, ComponentPrior::gaussian(detail::number(s, "prior.sigma2"))};
  } else if (prior_kind == "uniform") {
    cfg.model = {params, ComponentPrior::uniform(detail::number(s, "prior.lo"), detail::number(s, "prior.hi"))};
  } else {
    throw UsageError("prior.kind must be gaussian or uniform, got '" + prior_kind + "'");
  }

  cfg.gibbs.burn_in = detail::integer(s, "gibbs.burn_in");
  cfg.gibbs.samples = detail::integer(s, "gibbs.samples");
  cfg.gibbs.thin = detail::integer(s, "gibbs.thin");
  cfg.gibbs.seed = detail::unsigned_integer(s, "seed");
  cfg.gibbs.shuffle_order = detail::boolean(s, "gibbs.shuffle");
  try {
    cfg.gibbs.init = parse_gibbs_init(s.at("gibbs.init"));
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  cfg.gibbs.validate();
  cfg.chains = static_cast<int>(detail::integer(s, "gibbs.chains"));
  if (cfg.chains < 1) throw ValidationError("gibbs.chains must be at least 1");
  cfg.support_floor = detail::integer(s, "gibbs.support_floor");

  cfg.threads = static_cast<int>(detail::integer(s, "threads"));
  if (cfg.threads < 1) throw UsageError("threads must be at least 1");
  cfg.exact.limit = static_cast<int>(detail::integer(s, "exact.limit"));
  cfg.exact.threads = cfg.threads;
  cfg.exact.allow_outside_support = detail::boolean(s, "exact.allow_outside_support");

  // Echo every resolved key; generator keys come from describe().
  for (const auto& [k, v] : s) {
    if (k.rfind("generator.", 0) == 0 || k == "seed") continue;
    cfg.echo.emplace_back(k, v);
  }
  if (cfg.generator && !cfg.input) {
    for (const auto& kv : cfg.generator->describe()) cfg.echo.push_back(kv);
  } else {
    cfg.echo.emplace_back("seed", s.at("seed"));
  }
  return cfg;
}

inline nlohmann::ordered_json echo_json(const KeyValues& kv) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

inline std::vector<double> load_data(const ResolvedConfig& cfg) {
  if (cfg.input) return read_data_file(*cfg.input);
  if (cfg.generator) return generate(*cfg.generator).values;
  throw UsageError("no data source: give --input, --preset or generator.kind");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline void require_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("output directory does not exist: " + dir.string());
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline void cmd_generate(const ResolvedConfig& cfg, const std::filesystem::path& out_path) {
  if (!cfg.generator) throw UsageError("generate needs --preset or generator.kind");
  const auto data = generate(*cfg.generator);
  write_data_file(out_path, data.values, cfg.generator->describe());
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline void cmd_exact(const ResolvedConfig& cfg, const std::filesystem::path& out_dir) {
  require_directory(out_dir);
  const auto start = std::chrono::steady_clock::now();
  const auto data = load_data(cfg);
  const auto post = exact_posterior(data, cfg.model, cfg.exact);
  const double runtime = seconds_since(start);

  {
    auto out = open_output(out_dir / "exact_posterior.csv");
    out << "s,log_weight,prob,ratio,ratio_x_s,ratio_x_s2,bound_shape,quotient\n";
    for (int s = 1; s <= post.n(); ++s) {
      const auto r = post.ratio(s);
      const double shape = bound_shape(cfg.model, s);
      out << s << ',' << format_double(post.log_weight(s)) << ',' << format_double(post.prob(s)) << ','
          << optional_number(r) << ',' << optional_number(r ? std::optional(*r * s) : std::nullopt) << ','
          << optional_number(r ? std::optional(*r * s * s) : std::nullopt) << ',' << format_double(shape) << ','
          << optional_number(r ? std::optional(*r / shape) : std::nullopt) << '\n';
    }
  }
  {
    auto out = open_output(out_dir / "bound_report.csv");
    out << "s,prob,ratio,ratio_x_s,ratio_x_s2,bound_shape,theorem_shape,quotient\n";
    for (const auto& row : bound_report(post, cfg.model)) {
      out << row.s << ',' << format_double(row.prob) << ',' << format_double(row.ratio) << ','
          << format_double(row.ratio_x_s) << ',' << format_double(row.ratio_x_s2) << ','
          << format_double(row.bound_shape) << ',' << format_double(row.theorem_shape) << ','
          << format_double(row.quotient) << '\n';
    }
  }
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "exact";
  j["config"] = echo_json(cfg.echo);
  j["n"] = post.n();
  j["mode_k"] = post.mode();
  j["mean_k"] = post.mean();
  j["runtime_seconds"] = runtime;
  j["outputs"] = {"exact_posterior.csv", "bound_report.csv"};
  j["bound_shape_note"] =
      "bound_shape omits the unspecified universal constant; quotient = ratio / bound_shape. "
      "Ratios are left empty where P(K = s) underflows to zero and at s = n.";
  write_json(out_dir / "summary.json", j);
}

inline void cmd_gibbs(const ResolvedConfig& cfg, const std::filesystem::path& out_dir) {
  require_directory(out_dir);
  const auto start = std::chrono::steady_clock::now();
  const auto data = load_data(cfg);
  const auto result = cfg.chains == 1 ? gibbs_run(data, cfg.model, cfg.gibbs)
                                      : gibbs_run_chains(data, cfg.model, cfg.gibbs, cfg.chains, cfg.threads);
  const double runtime = seconds_since(start);
  const auto rows = histogram_ratios(result.histogram, cfg.support_floor);

  {
    auto out = open_output(out_dir / "histogram.csv");
    out << "s,count,prob,ratio,ratio_x_s,ratio_x_s2,stable_flag\n";
    for (const auto& row : rows) {
      out << row.s << ',' << row.count << ',' << format_double(row.prob) << ',' << format_double(row.ratio) << ','
          << format_double(row.ratio_x_s) << ',' << format_double(row.ratio_x_s2) << ',' << (row.stable ? 1 : 0)
          << '\n';
    }
  }
  {
    auto header = cfg.echo;
    header.emplace_back("rng", std::string(kRngName));
    auto out = open_output(out_dir / "trace.txt");
    write_trace(out, result.trace, header);
  }
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "gibbs";
  j["config"] = echo_json(cfg.echo);
  j["rng"] = kRngName;
  j["n"] = data.size();
  j["retained_draws"] = result.histogram.total();
  j["mode_k"] = result.histogram.mode();
  j["mean_k"] = result.histogram.mean();
  j["support_floor"] = cfg.support_floor;
  j["support_floor_rule"] = "rows with count below support_floor have stable_flag = 0; their ratio estimates are unreliable";
  std::vector<int> unstable;
  for (const auto& row : rows) {
    if (!row.stable) unstable.push_back(row.s);
  }
  j["unstable_rows"] = unstable;
  j["runtime_seconds"] = runtime;
  j["outputs"] = {"histogram.csv", "trace.txt"};
  write_json(out_dir / "summary.json", j);
}

struct VerifyOutcome {
  nlohmann::ordered_json report;
  bool passed = true;
};

inline VerifyOutcome cmd_verify(const verify::Options& opts, std::vector<std::string> suites) {
  if (suites.empty()) suites = verify::suite_names();
  VerifyOutcome outcome;
  auto& j = outcome.report;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "verify";
  j["config"] = {{"scale", opts.scale},
                 {"seed", opts.seed},
                 {"decomposition_max_n", opts.decomposition_max_n},
                 {"threads", opts.threads}};
  j["suites"] = nlohmann::ordered_json::array();
  for (const auto& name : suites) {
    const auto r = verify::run_suite(name, opts);
    nlohmann::ordered_json s;
    s["name"] = r.name;
    s["passed"] = r.passed;
    s["checks"] = r.checks;
    s["seconds"] = r.seconds;
    if (r.counterexample) {
      s["counterexample"] = echo_json(*r.counterexample);
      if (outcome.passed) j["first_counterexample"] = {{"suite", r.name}, {"detail", echo_json(*r.counterexample)}};
      outcome.passed = false;
    }
    j["suites"].push_back(s);
  }
  j["passed"] = outcome.passed;
  return outcome;
}

}  // namespace bnp::cli
