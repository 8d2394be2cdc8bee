#include "dispatch.hpp"

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kstage/experiments.hpp"
#include "kstage/io.hpp"
#include "kstage/model.hpp"
#include "kstage/ode.hpp"
#include "kstage/scaling.hpp"
#include "kstage/sde.hpp"
#include "kstage/trajectory.hpp"

namespace kstage::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPartitionComponent = 4;  // stream layout shared with the studies

struct Emitter {
  fs::path dir;
  std::string format;  // "csv" | "json"
  std::vector<std::string> files;

  void emit(const std::string& name, std::string_view content) {
    kstage::write_file(dir / name, content);
    files.push_back(name);
  }

  /* Bulk numeric tables follow --format; fixed-shape artifacts do not. */
  void emit_table(const std::string& stem, const std::vector<std::string>& columns,
                  const std::vector<std::vector<double>>& rows) {
    if (format == "json")
      emit(stem + ".json", kstage::table_json(columns, rows));
    else
      emit(stem + ".csv", kstage::table_csv(columns, rows));
  }

  void emit_table(const std::string& stem, const kstage::ReplicaTable& table) {
    emit_table(stem, table.columns, table.rows);
  }
};

int get_K(const RunConfig& cfg) {
  std::int64_t K = cfg.get_i64("K");
  if (K < 1 || K > 64) throw UsageError("option --K: expected a stage count in [1, 64]");
  return static_cast<int>(K);
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += kstage::format_double(v[i]);
  }
  return out;
}

/* A single value broadcasts to all K stages, so the defaulted "0" (and any
 * scalar shorthand) works for every K and survives a manifest round trip. */
std::vector<double> broadcast_k(std::vector<double> v, int K, const std::string& key) {
  if (static_cast<int>(v.size()) == K) return v;
  if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(K), v[0]);
  throw UsageError("option --" + key + ": expected 1 or " + std::to_string(K) +
                   " comma-separated values");
}

/* Per-stage list option; the materialized length-K form is written back so
 * the manifest echoes exactly what ran. */
std::vector<double> length_k_list(RunConfig& cfg, const std::string& key, int K) {
  std::vector<double> v = cfg.has(key)
                              ? broadcast_k(cfg.get_doubles(key), K, key)
                              : std::vector<double>(static_cast<std::size_t>(K), 0.0);
  cfg.values[key] = join_doubles(v);
  return v;
}

std::vector<std::string> state_columns(const std::string& prefix, int K) {
  std::vector<std::string> cols{"time"};
  for (int k = 0; k <= K + 1; ++k) cols.push_back(prefix + "_" + std::to_string(k));
  return cols;
}

std::vector<std::vector<double>> trajectory_rows(const kstage::Trajectory& traj) {
  std::vector<std::vector<double>> rows;
  rows.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    for (std::int64_t v : traj.states[i].a) row.push_back(static_cast<double>(v));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<double>> rescaled_rows(const kstage::RescaledView& view) {
  std::vector<std::vector<double>> rows;
  rows.reserve(view.rows());
  const int K = view.constants().K;
  for (std::size_t i = 0; i < view.rows(); ++i) {
    std::vector<double> row{view.time(i)};
    for (int k = 0; k <= K + 1; ++k) row.push_back(view.value(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<double>> path_rows(const std::vector<double>& times,
                                           const std::vector<std::vector<double>>& values) {
  std::vector<std::vector<double>> rows;
  rows.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i]};
    row.insert(row.end(), values[i].begin(), values[i].end());
    rows.push_back(std::move(row));
  }
  return rows;
}

kstage::ForcingPath load_forcing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("option --forcing: cannot open '" + path + "'");
  std::vector<double> times, values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string t_text, y_text;
    if (!std::getline(fields, t_text, ',') || !std::getline(fields, y_text))
      throw UsageError("option --forcing: '" + path + "' needs two comma-separated columns");
    try {
      std::size_t used = 0;
      double t = std::stod(t_text, &used);
      if (used != t_text.size()) throw std::invalid_argument(t_text);
      double y = std::stod(y_text, &used);
      if (used != y_text.size()) throw std::invalid_argument(y_text);
      times.push_back(t);
      values.push_back(y);
    } catch (const std::exception&) {
      if (first) {  // tolerate one header line
        first = false;
        continue;
      }
      throw UsageError("option --forcing: non-numeric row '" + line + "' in '" + path + "'");
    }
    first = false;
  }
  if (times.empty()) throw UsageError("option --forcing: '" + path + "' holds no samples");
  return kstage::ForcingPath::sampled(std::move(times), std::move(values));
}

// --- simulate ---------------------------------------------------------------

struct SimulatePlan {
  kstage::ModelParams params;
  kstage::PopulationState init;
  kstage::StopRule stop;
  kstage::RecordRule record = kstage::RecordRule::events();
  bool have_constants = false;
  kstage::ScalingConstants constants;
};

SimulatePlan build_simulate(RunConfig& cfg) {
  SimulatePlan plan;
  const int K = get_K(cfg);
  const std::int64_t n = cfg.get_i64("n");

  const bool gamma_given = cfg.has("gamma");
  const bool regime_given = cfg.has("regime");
  const bool tau_given = cfg.has("tau");

  if (regime_given) {
    const kstage::Regime regime = kstage::regime_from_name(cfg.get_string("regime"));
    double alpha1 = 0.0;
    if (regime != kstage::Regime::intermediate) {
      if (!cfg.has("alpha1"))
        throw UsageError("option --alpha1 is required for --regime " + cfg.get_string("regime"));
      alpha1 = cfg.get_double("alpha1");
    }
    plan.constants = kstage::scaling_constants(regime, n, K, alpha1);
    plan.have_constants = true;
  }

  std::vector<double> delta, epsilon;
  if (gamma_given) {
    if (cfg.explicit_keys.count("delta") || cfg.explicit_keys.count("epsilon"))
      throw UsageError("--gamma determines the perturbations; it excludes --delta and --epsilon");
    if (regime_given == tau_given)
      throw UsageError("--gamma requires exactly one of --regime or --tau");
    const std::vector<double> gamma = broadcast_k(cfg.get_doubles("gamma"), K, "gamma");
    cfg.values["gamma"] = join_doubles(gamma);
    cfg.values.erase("delta");    // superseded; kept out of the manifest echo
    cfg.values.erase("epsilon");
    auto pair = plan.have_constants
                    ? kstage::perturbations_for_gamma(gamma, plan.constants)
                    : kstage::perturbations_for_gamma(gamma, cfg.get_double("tau"));
    delta = std::move(pair.first);
    epsilon = std::move(pair.second);
  } else {
    if (tau_given) throw UsageError("--tau only applies together with --gamma");
    delta = length_k_list(cfg, "delta", K);
    epsilon = length_k_list(cfg, "epsilon", K);
  }
  plan.params = kstage::ModelParams{n, K, std::move(delta), std::move(epsilon)};
  plan.params.validate();

  const bool init_given = cfg.has("init");
  const bool stage1_given = cfg.has("init-stage1");
  if (init_given == stage1_given)
    throw UsageError("exactly one of --init and --init-stage1 is required");
  if (init_given) {
    kstage::PopulationState s;
    s.a = cfg.get_i64s("init");
    s.validate(plan.params);
    plan.init = std::move(s);
  } else {
    plan.init = kstage::initial_with_stage1(plan.params, cfg.get_i64("init-stage1"));
  }

  const std::string stop = cfg.get_string("stop");
  if (stop == "absorption") {
    plan.stop = kstage::StopRule::absorption();
    if (cfg.has("horizon")) throw UsageError("--horizon requires --stop horizon");
  } else if (stop == "horizon") {
    if (!cfg.has("horizon")) throw UsageError("--stop horizon requires --horizon");
    plan.stop = kstage::StopRule::at_time(cfg.get_double("horizon"));
  } else if (stop == "stage1-extinction") {
    plan.stop = kstage::StopRule::stage1_extinction();
    if (cfg.has("horizon")) throw UsageError("--horizon requires --stop horizon");
  } else {
    throw UsageError("option --stop: expected absorption, horizon, or stage1-extinction");
  }

  const std::string record = cfg.get_string("record");
  if (record == "events") {
    if (cfg.has("grid")) throw UsageError("--grid requires --record grid");
    plan.record = kstage::RecordRule::events();
  } else if (record == "grid") {
    if (!cfg.has("grid")) throw UsageError("--record grid requires --grid");
    plan.record = kstage::RecordRule::at_times(cfg.get_doubles("grid"));
  } else {
    throw UsageError("option --record: expected events or grid");
  }
  return plan;
}

void run_simulate(const RunConfig& cfg, const SimulatePlan& plan, Emitter& out) {
  kstage::Trajectory traj = kstage::simulate_path(plan.params, plan.init, plan.stop,
                                                  kstage::RngSeed{cfg.master_seed(), 0},
                                                  plan.record);
  if (out.format == "json")
    out.emit("trajectory.json",
             kstage::table_json(state_columns("a", plan.params.K), trajectory_rows(traj)));
  else
    out.emit("trajectory.csv", kstage::trajectory_csv(traj));
  out.emit("summary.json", kstage::trajectory_summary_json(traj));
  if (plan.have_constants) {
    kstage::RescaledView view(traj, plan.constants);
    if (out.format == "json")
      out.emit("rescaled.json",
               kstage::table_json(state_columns("A", plan.params.K), rescaled_rows(view)));
    else
      out.emit("rescaled.csv", kstage::rescaled_csv(traj, plan.constants));
  }
}

// --- sde ---------------------------------------------------------------------

struct SdePlan {
  kstage::SdeSpec spec;
  std::vector<double> init;
  kstage::SdeConfig config;
  bool terminal = false;
  kstage::TerminalConfig terminal_config;
};

SdePlan build_sde(RunConfig& cfg) {
  SdePlan plan;
  const int K = get_K(cfg);
  plan.spec.K = K;
  plan.spec.gamma = length_k_list(cfg, "gamma", K);
  const std::string variant = cfg.get_string("variant");
  if (variant == "intermediate")
    plan.spec.variant = kstage::SdeVariant::intermediate;
  else if (variant == "small")
    plan.spec.variant = kstage::SdeVariant::small;
  else if (variant == "feller")
    plan.spec.variant = kstage::SdeVariant::feller;
  else
    throw UsageError("option --variant: expected intermediate, small, or feller");
  plan.spec.validate();

  if (cfg.has("init")) {
    plan.init = cfg.get_doubles("init");
  } else {
    plan.init.assign(static_cast<std::size_t>(K) + 2, 0.0);
    plan.init[1] = 1.0;
    cfg.values["init"] = join_doubles(plan.init);
  }
  plan.config.dt = cfg.get_double("dt");
  plan.config.T = cfg.get_double("horizon");
  plan.terminal = cfg.get_flag("terminal");
  plan.terminal_config.dt = plan.config.dt;
  return plan;
}

void run_sde(const RunConfig& cfg, const SdePlan& plan, Emitter& out) {
  const kstage::RngSeed seed{cfg.master_seed(), 0};
  if (plan.terminal) {
    kstage::TerminalOutbreak terminal =
        kstage::terminal_outbreak(plan.spec, plan.init, plan.terminal_config, seed);
    out.emit("terminal.json", kstage::terminal_outbreak_json(terminal));
    return;
  }
  kstage::DiffusionPath path = kstage::integrate_sde(plan.spec, plan.init, plan.config, seed);
  if (out.format == "json")
    out.emit("sde.json",
             kstage::table_json(state_columns("A", plan.spec.K), path_rows(path.times, path.values)));
  else
    out.emit("sde.csv", kstage::diffusion_csv(path));
}

// --- ode ---------------------------------------------------------------------

struct OdePlan {
  std::vector<double> init;
  std::vector<double> gamma;
  kstage::OdeGrid grid;
  bool closed_form = false;
  kstage::ForcingPath forcing;
};

OdePlan build_ode(RunConfig& cfg) {
  OdePlan plan;
  const int K = get_K(cfg);
  plan.gamma = length_k_list(cfg, "gamma", K);
  plan.init = cfg.get_doubles("init");
  if (static_cast<int>(plan.init.size()) != K + 1)
    throw UsageError("option --init: expected " + std::to_string(K + 1) +
                     " values x_0,x_2,...,x_" + std::to_string(K + 1));
  plan.grid.dt = cfg.get_double("dt");
  plan.grid.T = cfg.get_double("horizon");
  plan.closed_form = cfg.get_flag("closed-form");
  if (plan.closed_form && cfg.has("forcing"))
    throw UsageError("--closed-form solves the unforced system; it excludes --forcing");
  if (cfg.has("forcing")) plan.forcing = load_forcing(cfg.get_string("forcing"));
  return plan;
}

void run_ode(const RunConfig&, const OdePlan& plan, Emitter& out) {
  kstage::OdeSolution sol = plan.closed_form
                                ? kstage::closed_form_y0(plan.init, plan.gamma, plan.grid)
                                : kstage::integrate_ode(plan.init, plan.forcing, plan.gamma,
                                                        plan.grid);
  if (out.format == "json") {
    std::vector<std::string> cols{"time"};
    for (const auto& name : sol.coordinate_names()) cols.push_back(name);
    out.emit("ode.json", kstage::table_json(cols, path_rows(sol.times, sol.values)));
  } else {
    out.emit("ode.csv", kstage::ode_csv(sol));
  }
  out.emit("ode_properties.json", kstage::ode_properties_json(kstage::verify_properties(sol)));
}

// --- studies -----------------------------------------------------------------

void emit_report(const kstage::StudyReport& report, Emitter& out) {
  out.emit("report.json", kstage::report_json(report));
  out.emit("statistics.csv", kstage::statistics_csv(report));
}

kstage::ConvergenceConfig build_convergence(RunConfig& cfg) {
  kstage::ConvergenceConfig c;
  c.K = get_K(cfg);
  c.gamma = length_k_list(cfg, "gamma", c.K);
  c.n_grid = cfg.get_i64s("n-grid");
  c.replicas = static_cast<std::size_t>(cfg.get_i64("replicas"));
  c.observation_times = cfg.get_doubles("times");
  c.a1_initial = cfg.get_double("a1");
  c.sde_dt = cfg.get_double("dt");
  c.ks_threshold = cfg.get_double("threshold");
  c.workers = cfg.workers();
  return c;
}

void run_convergence(const kstage::ConvergenceConfig& c, std::uint64_t seed, Emitter& out) {
  kstage::ConvergenceStudy study = kstage::convergence_study(c, seed);
  emit_report(study.report, out);
  out.emit("ks.csv", kstage::ks_entries_csv(study.distances));
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    out.emit_table("samples_n" + std::to_string(c.n_grid[i]), study.ctmc_samples[i]);
  out.emit_table("sde_samples", study.sde_samples);
}

kstage::OutbreakConfig build_outbreak(RunConfig& cfg) {
  kstage::OutbreakConfig c;
  c.K = get_K(cfg);
  c.gamma = length_k_list(cfg, "gamma", c.K);
  c.n_grid = cfg.get_i64s("n-grid");
  c.replicas = static_cast<std::size_t>(cfg.get_i64("replicas"));
  c.bootstrap = static_cast<std::size_t>(cfg.get_i64("bootstrap"));
  c.workers = cfg.workers();
  return c;
}

void run_outbreak(const kstage::OutbreakConfig& c, std::uint64_t seed, Emitter& out) {
  kstage::OutbreakStudy study = kstage::outbreak_scaling_fit(c, seed);
  emit_report(study.report, out);
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    out.emit_table("terminals_n" + std::to_string(c.n_grid[i]), study.terminals[i]);
}

kstage::CollapseConfig build_collapse(RunConfig& cfg) {
  kstage::CollapseConfig c;
  c.K = get_K(cfg);
  c.gamma = length_k_list(cfg, "gamma", c.K);
  c.n_grid = cfg.get_i64s("n-grid");
  c.replicas = static_cast<std::size_t>(cfg.get_i64("replicas"));
  c.window = cfg.get_double("window");
  c.ode_dt = cfg.get_double("ode-dt");
  c.rank_alpha = cfg.get_double("alpha");
  c.workers = cfg.workers();
  return c;
}

void run_collapse(const kstage::CollapseConfig& c, std::uint64_t seed, Emitter& out) {
  kstage::CollapseStudy study = kstage::collapse_study(c, seed);
  emit_report(study.report, out);
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    out.emit_table("deviations_n" + std::to_string(c.n_grid[i]), study.deviations[i]);
}

kstage::ConjectureConfig build_conjecture(RunConfig& cfg) {
  kstage::ConjectureConfig c;
  c.K = get_K(cfg);
  c.n_grid = cfg.get_i64s("n-grid");
  c.replicas = static_cast<std::size_t>(cfg.get_i64("replicas"));
  c.bootstrap = static_cast<std::size_t>(cfg.get_i64("bootstrap"));
  c.partition_samples = static_cast<std::size_t>(cfg.get_i64("partition-samples"));
  c.workers = cfg.workers();
  return c;
}

void run_conjecture(const kstage::ConjectureConfig& c, std::uint64_t seed, Emitter& out) {
  kstage::ConjectureStudy study = kstage::conjecture_exponents(c, seed);
  emit_report(study.report, out);
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    out.emit_table("counters_n" + std::to_string(c.n_grid[i]), study.counters[i]);
}

struct PartitionPlan {
  kstage::ModelParams params;
  std::int64_t samples = 1;
};

PartitionPlan build_partition(RunConfig& cfg) {
  PartitionPlan plan;
  const int K = get_K(cfg);
  plan.params = kstage::ModelParams{cfg.get_i64("n"), K, length_k_list(cfg, "delta", K),
                                    length_k_list(cfg, "epsilon", K)};
  plan.params.validate();
  plan.samples = cfg.get_i64("samples");
  if (plan.samples < 1) throw UsageError("option --samples: expected a positive count");
  return plan;
}

void run_partition(const PartitionPlan& plan, std::uint64_t seed, Emitter& out) {
  const int K = plan.params.K;
  std::vector<kstage::PartitionSample> draws;
  draws.reserve(static_cast<std::size_t>(plan.samples));
  for (std::int64_t s = 0; s < plan.samples; ++s) {
    draws.push_back(kstage::random_partition(
        plan.params,
        kstage::RngSeed{seed, kstage::compose_stream(kPartitionComponent, 0,
                                                     static_cast<std::uint64_t>(s))}));
  }
  if (out.format == "json") {
    std::vector<std::string> cols{"sample", "block", "size"};
    for (int k = 1; k <= K; ++k) cols.push_back("N_" + std::to_string(k));
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < draws.size(); ++s) {
      for (std::size_t b = 0; b < draws[s].block_sizes.size(); ++b) {
        std::vector<double> row{static_cast<double>(s), static_cast<double>(b),
                                static_cast<double>(draws[s].block_sizes[b])};
        for (std::int64_t c : draws[s].block_counters[b]) row.push_back(static_cast<double>(c));
        rows.push_back(std::move(row));
      }
    }
    out.emit("partition.json", kstage::table_json(cols, rows));
  } else {
    out.emit("partition.csv", kstage::partition_csv(draws));
  }
}

}  // namespace

std::vector<std::string> run_command(RunConfig cfg) {
  /* Build and validate everything first, then write the manifest, then
   * compute: inadmissible parameters never leave files behind, and the
   * manifest always precedes the long part of the run. */
  const std::uint64_t seed = cfg.master_seed();
  std::function<void(Emitter&)> action;
  if (cfg.subcommand == "simulate") {
    action = [&cfg, plan = build_simulate(cfg)](Emitter& out) { run_simulate(cfg, plan, out); };
  } else if (cfg.subcommand == "sde") {
    action = [&cfg, plan = build_sde(cfg)](Emitter& out) { run_sde(cfg, plan, out); };
  } else if (cfg.subcommand == "ode") {
    action = [&cfg, plan = build_ode(cfg)](Emitter& out) { run_ode(cfg, plan, out); };
  } else if (cfg.subcommand == "study-convergence") {
    action = [seed, c = build_convergence(cfg)](Emitter& out) { run_convergence(c, seed, out); };
  } else if (cfg.subcommand == "study-outbreak") {
    action = [seed, c = build_outbreak(cfg)](Emitter& out) { run_outbreak(c, seed, out); };
  } else if (cfg.subcommand == "study-collapse") {
    action = [seed, c = build_collapse(cfg)](Emitter& out) { run_collapse(c, seed, out); };
  } else if (cfg.subcommand == "study-conjecture") {
    action = [seed, c = build_conjecture(cfg)](Emitter& out) { run_conjecture(c, seed, out); };
  } else if (cfg.subcommand == "partition") {
    action = [seed, plan = build_partition(cfg)](Emitter& out) { run_partition(plan, seed, out); };
  } else {
    throw UsageError("unknown subcommand '" + cfg.subcommand + "'");
  }

  Emitter out;
  out.dir = fs::path(cfg.output_dir());
  out.format = cfg.format();
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out.dir.string() +
                                   "': " + ec.message());
  out.emit("manifest.json", manifest_json(cfg));
  action(out);
  return out.files;
}

}  // namespace kstage::cli
