#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace kstage::cli {

/* Bad invocation: unknown flag, type mismatch, missing required option,
 * conflicting options. Reported on stderr with exit status 2. */
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Parse finished by printing (help text, parse diagnostics); carry the
 * process exit code upward. */
struct CliExit {
  int code = 0;
};

struct OptionSpec {
  const char* name;  // long name, no leading --
  const char* help;
  bool is_flag = false;
  const char* default_value = nullptr;  // nullptr: absent unless provided
  bool required = false;
};

struct SubcommandSpec {
  const char* name;
  const char* help;
  std::vector<OptionSpec> options;  // command-specific; common options are implicit
};

const std::vector<SubcommandSpec>& subcommand_specs();

/* Fully resolved invocation: defaults, then config-file values, then command
 * line flags, last writer wins. `values` holds every option of the chosen
 * subcommand that has a value; `explicit_keys` marks the ones provided by
 * the user (config or argv) rather than defaulted. */
struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;
  std::set<std::string> explicit_keys;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  /* Typed access; every failure is a UsageError naming the option. */
  std::int64_t get_i64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_flag(const std::string& key) const;  // false when absent
  const std::string& get_string(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;       // comma list
  std::vector<std::int64_t> get_i64s(const std::string& key) const;    // comma list

  std::uint64_t master_seed() const { return get_u64("seed"); }
  std::string output_dir() const { return get_string("output-dir"); }
  std::string format() const { return get_string("format"); }  // "csv" | "json"
  int workers() const { return static_cast<int>(get_i64("workers")); }
};

/* argv[1..] -> RunConfig. Reads --config (flat JSON key/value, or a manifest
 * with "subcommand" + "parameters"), lets flags override it, fills defaults,
 * draws and records an entropy seed when none was given, and rejects missing
 * required options by name. Throws UsageError or CliExit. */
RunConfig parse_config(const std::vector<std::string>& args);

/* Manifest text: resolved configuration echo plus seed, tool version, and
 * (optionally) a wall-clock timestamp — the only place a timestamp appears. */
std::string manifest_json(const RunConfig& cfg, bool with_timestamp = true);

}  // namespace kstage::cli
