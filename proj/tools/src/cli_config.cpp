#include "cli_config.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include <json.hpp>

#include "kstage/io.hpp"

namespace kstage::cli {

namespace {

constexpr OptionSpec kCommonOptions[] = {
    {"seed", "Master seed (64-bit); drawn from system entropy and recorded when omitted"},
    {"workers", "Worker threads for replica loops (0 = machine parallelism)", false, "0"},
    {"output-dir", "Directory for all output files", false, "."},
    {"format", "Output format for data tables: csv or json", false, "csv"},
    {"config", "JSON config file; command line flags override its values"},
};

const std::vector<SubcommandSpec>& specs() {
  static const std::vector<SubcommandSpec> kSpecs = {
      {"simulate",
       "Simulate one trajectory of the K-stage infection chain",
       {
           {"K", "Number of infectious stages (>= 1)", false, nullptr, true},
           {"n", "Population size", false, nullptr, true},
           {"delta", "Comma list of K stage-rate perturbations delta_1..delta_K", false, "0"},
           {"epsilon", "Comma list of K infection-rate perturbations epsilon_1..epsilon_K", false, "0"},
           {"gamma", "Comma list of K rescaled perturbations; needs --regime or --tau, excludes --delta/--epsilon"},
           {"regime", "Scaling regime: small, intermediate, or large (enables rescaled output)"},
           {"alpha1", "Stage-1 scale alpha_1 (required for small and large regimes)"},
           {"tau", "Explicit time scale tau for --gamma (alternative to --regime)"},
           {"init", "Comma list of K+2 initial counts a_0,a_1,...,a_{K+1} summing to n"},
           {"init-stage1", "Initial stage-1 count m: start from (n-m, m, 0, ..., 0)"},
           {"stop", "Stop rule: absorption, horizon, or stage1-extinction", false, "absorption"},
           {"horizon", "Time horizon (required when --stop horizon)"},
           {"record", "Record mode: events (every jump) or grid (only --grid times)", false, "events"},
           {"grid", "Comma list of record times for --record grid"},
       }},
      {"sde",
       "Integrate the diffusion limit by Euler-Maruyama",
       {
           {"K", "Number of stages (>= 1)", false, nullptr, true},
           {"gamma", "Comma list of K drift parameters gamma_1..gamma_K", false, "0"},
           {"variant", "Drift variant: intermediate, small, or feller", false, "intermediate"},
           {"init", "Comma list of K+2 initial coordinates A_0(0..K+1)", false, nullptr},
           {"dt", "Euler-Maruyama step size", false, "1e-3"},
           {"horizon", "Integration horizon T", false, "1"},
           {"terminal", "Run to absorption and report the terminal-size functional instead of a path", true},
       }},
      {"ode",
       "Integrate the forced fluid system by fourth-order Runge-Kutta",
       {
           {"K", "Number of stages (>= 1)", false, nullptr, true},
           {"gamma", "Comma list of K drift parameters gamma_1..gamma_K", false, "0"},
           {"init", "Comma list of K+1 initial values x_0,x_2,...,x_{K+1}", false, nullptr, true},
           {"dt", "Runge-Kutta step size", false, "1e-3"},
           {"horizon", "Integration horizon T", false, "1"},
           {"forcing", "CSV file (time,y) sampled on an increasing grid from 0; zero forcing when omitted"},
           {"closed-form", "Use the closed-form unforced solution instead of Runge-Kutta", true},
       }},
      {"study-convergence",
       "Distributional convergence of rescaled chains toward the diffusion",
       {
           {"K", "Number of stages (>= 1)", false, nullptr, true},
           {"gamma", "Comma list of K drift parameters", false, "0"},
           {"n-grid", "Comma list of increasing population sizes", false, nullptr, true},
           {"replicas", "Replicas per population size", false, "10000"},
           {"times", "Comma list of rescaled observation times", false, "1"},
           {"a1", "Initial rescaled stage-1 mass A_1(0)", false, "1"},
           {"dt", "Euler-Maruyama step for the reference diffusion ensemble", false, "1e-3"},
           {"threshold", "Distance threshold for the convergence verdict", false, "0.05"},
       }},
      {"study-outbreak",
       "Terminal outbreak size scaling across population sizes",
       {
           {"K", "Number of stages (>= 1)", false, nullptr, true},
           {"gamma", "Comma list of K drift parameters", false, "0"},
           {"n-grid", "Comma list of increasing population sizes (>= 3 values)", false, nullptr, true},
           {"replicas", "Replicas per population size", false, "1000"},
           {"bootstrap", "Bootstrap rounds for the exponent confidence interval", false, "1000"},
       }},
      {"study-collapse",
       "State-space collapse onto the forced fluid system after stage-1 extinction",
       {
           {"K", "Number of stages (>= 2)", false, "2"},
           {"gamma", "Comma list of K drift parameters", false, "0"},
           {"n-grid", "Comma list of increasing population sizes", false, nullptr, true},
           {"replicas", "Replicas per population size", false, "1000"},
           {"window", "Rescaled comparison window length after extinction", false, "1"},
           {"ode-dt", "Runge-Kutta step for the comparison flow", false, "1e-3"},
           {"alpha", "One-sided rank-test level for the decreasing-deviation verdict", false, "0.01"},
       }},
      {"study-conjecture",
       "Stage-visit count exponents from a single initial case at criticality",
       {
           {"K", "Number of stages (>= 1)", false, nullptr, true},
           {"n-grid", "Comma list of increasing population sizes (>= 2 values)", false, nullptr, true},
           {"replicas", "Replicas per population size", false, "10000"},
           {"bootstrap", "Bootstrap rounds for exponent confidence intervals", false, "1000"},
           {"partition-samples", "Epidemic-partition draws for the exchangeable-block probe", false, "100"},
       }},
      {"partition",
       "Draw exchangeable random partitions from repeated epidemics",
       {
           {"K", "Number of stages (>= 1)", false, nullptr, true},
           {"n", "Population size (= number of partitioned elements)", false, nullptr, true},
           {"delta", "Comma list of K stage-rate perturbations", false, "0"},
           {"epsilon", "Comma list of K infection-rate perturbations", false, "0"},
           {"samples", "Number of independent partition draws", false, "1"},
       }},
  };
  return kSpecs;
}

std::string json_scalar_to_string(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_float()) return kstage::format_double(v.get<double>());
  throw UsageError("config: value for '" + key + "' must be a scalar");
}

struct ConfigFile {
  std::string subcommand;  // empty when the file names none
  std::map<std::string, std::string> values;
};

ConfigFile load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config: '" + path + "' must hold a JSON object");

  ConfigFile out;
  const nlohmann::json* params = &doc;
  if (doc.contains("parameters")) {  // manifest shape
    if (!doc["parameters"].is_object())
      throw UsageError("config: 'parameters' in '" + path + "' must be an object");
    params = &doc["parameters"];
    if (doc.contains("master_seed") && !params->contains("seed"))
      out.values["seed"] = json_scalar_to_string(doc["master_seed"], "master_seed");
  }
  if (doc.contains("subcommand"))
    out.subcommand = json_scalar_to_string(doc["subcommand"], "subcommand");
  for (const auto& [key, value] : params->items()) {
    if (key == "subcommand" || key == "config") continue;
    out.values[key] = json_scalar_to_string(value, key);
  }
  return out;
}

/* Locate --config in raw arguments (both "--config path" and "--config=path"). */
std::string scan_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config requires a file path");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

bool mentions_subcommand(const std::vector<std::string>& args) {
  for (const auto& a : args)
    for (const auto& s : specs())
      if (a == s.name) return true;
  return false;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
}

std::string normalized_format(const std::string& f) {
  if (f == "csv") return "csv";
  if (f == "json" || f == "structured-text") return "json";
  throw UsageError("option --format: expected 'csv' or 'json', got '" + f + "'");
}

const OptionSpec* find_spec(const SubcommandSpec& sub, const std::string& name) {
  for (const auto& o : sub.options)
    if (name == o.name) return &o;
  for (const auto& o : kCommonOptions)
    if (name == o.name) return &o;
  return nullptr;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) parts.push_back(item);
  if (!text.empty() && text.back() == ',') parts.emplace_back();
  return parts;
}

double parse_double_or_throw(const std::string& text, const std::string& option) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError("option --" + option + ": expected a number, got '" + text + "'");
  }
}

std::int64_t parse_i64_or_throw(const std::string& text, const std::string& option) {
  std::int64_t v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw UsageError("option --" + option + ": expected an integer, got '" + text + "'");
  return v;
}

}  // namespace

const std::vector<SubcommandSpec>& subcommand_specs() { return specs(); }

std::int64_t RunConfig::get_i64(const std::string& key) const {
  return parse_i64_or_throw(get_string(key), key);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& text = get_string(key);
  std::uint64_t v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw UsageError("option --" + key + ": expected an unsigned integer, got '" + text + "'");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  return parse_double_or_throw(get_string(key), key);
}

bool RunConfig::get_flag(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) return false;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw UsageError("option --" + key + ": expected true or false, got '" + it->second + "'");
}

const std::string& RunConfig::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end())
    throw UsageError("option --" + key + " is required but was not provided");
  return it->second;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split_list(get_string(key)))
    out.push_back(parse_double_or_throw(part, key));
  return out;
}

std::vector<std::int64_t> RunConfig::get_i64s(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& part : split_list(get_string(key)))
    out.push_back(parse_i64_or_throw(part, key));
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  ConfigFile config;
  const std::string config_path = scan_config_path(args);
  if (!config_path.empty()) config = load_config_file(config_path);

  std::vector<std::string> effective = args;
  if (!mentions_subcommand(effective) && !config.subcommand.empty())
    effective.insert(effective.begin(), config.subcommand);

  CLI::App app{"kstage: a laboratory for critical multistage epidemics"};
  app.require_subcommand(0, 1);

  /* Stable storage for CLI11 bindings: one node per (subcommand, option). */
  std::map<std::string, std::map<std::string, std::string>> string_store;
  std::map<std::string, std::map<std::string, bool>> flag_store;
  std::map<std::string, std::map<std::string, CLI::Option*>> option_handles;
  std::map<std::string, CLI::App*> sub_apps;

  for (const auto& sub_spec : specs()) {
    CLI::App* sub = app.add_subcommand(sub_spec.name, sub_spec.help);
    sub_apps[sub_spec.name] = sub;
    auto add_one = [&](const OptionSpec& o) {
      const std::string flag_name = std::string("--") + o.name;
      CLI::Option* handle = nullptr;
      if (o.is_flag) {
        handle = sub->add_flag(flag_name, flag_store[sub_spec.name][o.name], o.help);
      } else {
        handle = sub->add_option(flag_name, string_store[sub_spec.name][o.name], o.help);
        handle->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
      option_handles[sub_spec.name][o.name] = handle;
    };
    for (const auto& o : sub_spec.options) add_one(o);
    for (const auto& o : kCommonOptions) add_one(o);
  }

  try {
    std::vector<const char*> argv;
    argv.push_back("kstage");
    for (const auto& a : effective) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help text or the diagnostic
    throw CliExit{code == 0 ? 0 : 2};
  }

  const auto chosen = app.get_subcommands();
  if (chosen.empty())
    throw UsageError("a subcommand is required; run with --help for the list");
  const std::string sub_name = chosen.front()->get_name();
  const SubcommandSpec* sub_spec = nullptr;
  for (const auto& s : specs())
    if (sub_name == s.name) sub_spec = &s;

  RunConfig cfg;
  cfg.subcommand = sub_name;

  /* Config-file keys must belong to the chosen subcommand. */
  for (const auto& [key, value] : config.values) {
    if (find_spec(*sub_spec, key) == nullptr)
      throw UsageError("config: unknown option '" + key + "' for subcommand '" + sub_name + "'");
  }

  auto resolve_one = [&](const OptionSpec& o) {
    const std::string name = o.name;
    if (name == "config") return;  // meta-option, not part of the run
    bool have = false;
    std::string value;
    if (o.default_value != nullptr) {
      value = o.default_value;
      have = true;
    }
    if (auto it = config.values.find(name); it != config.values.end()) {
      value = it->second;
      have = true;
      cfg.explicit_keys.insert(name);
    }
    if (option_handles[sub_name][name]->count() > 0) {
      value = o.is_flag ? "true" : string_store[sub_name][name];
      have = true;
      cfg.explicit_keys.insert(name);
    }
    if (o.is_flag && !have) {
      value = "false";
      have = true;
    }
    if (have) cfg.values[name] = value;
  };
  for (const auto& o : sub_spec->options) resolve_one(o);
  for (const auto& o : kCommonOptions) resolve_one(o);

  std::vector<std::string> missing;
  for (const auto& o : sub_spec->options)
    if (o.required && !cfg.has(o.name)) missing.push_back(o.name);
  if (!missing.empty()) {
    std::string msg = "missing required option";
    if (missing.size() > 1) msg += "s";
    msg += ":";
    for (const auto& m : missing) msg += " --" + m;
    throw UsageError(msg);
  }

  cfg.values["format"] = normalized_format(cfg.get_string("format"));
  if (!cfg.has("seed")) cfg.values["seed"] = std::to_string(entropy_seed());
  (void)cfg.get_u64("seed");  // fail fast on malformed seeds

  if (cfg.get_i64("workers") == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    cfg.values["workers"] = std::to_string(hw == 0 ? 1u : hw);
  }
  if (cfg.get_i64("workers") < 1)
    throw UsageError("option --workers: expected a positive count, got '" +
                     cfg.get_string("workers") + "'");
  return cfg;
}

std::string manifest_json(const RunConfig& cfg, bool with_timestamp) {
  nlohmann::ordered_json doc;
  doc["subcommand"] = cfg.subcommand;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [key, value] : cfg.values) params[key] = value;
  doc["parameters"] = std::move(params);
  doc["master_seed"] = cfg.master_seed();
  doc["tool_version"] = KSTAGE_VERSION;
  if (with_timestamp) {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm_utc.tm_year + 1900,
                  tm_utc.tm_mon + 1, tm_utc.tm_mday, tm_utc.tm_hour, tm_utc.tm_min,
                  tm_utc.tm_sec);
    doc["created"] = buf;
  }
  return doc.dump(2) + "\n";
}

}  // namespace kstage::cli
