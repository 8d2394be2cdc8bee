#include "kstage/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "kstage/compensator.hpp"
#include "kstage/ode.hpp"
#include "kstage/scaling.hpp"
#include "kstage/sde.hpp"
#include "kstage/stats.hpp"
#include "kstage/trajectory.hpp"

namespace kstage {

void StudyReport::add_parameter(std::string name, std::string value) {
  parameters.emplace_back(std::move(name), std::move(value));
}

void StudyReport::add(std::string name, double value, double uncertainty,
                      std::size_t replicas) {
  statistics.push_back({std::move(name), value, uncertainty, replicas});
}

const Statistic* StudyReport::find(std::string_view name) const {
  for (const auto& s : statistics) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<double> ReplicaTable::column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.at(j));
  return out;
}

namespace {

// Stream-id components; unique within one study run (each run has its own key).
constexpr std::uint64_t kCtmcComponent = 1;
constexpr std::uint64_t kSdeComponent = 2;
constexpr std::uint64_t kBootstrapComponent = 3;
constexpr std::uint64_t kPartitionComponent = 4;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string num(std::int64_t v) { return std::to_string(v); }

template <typename T>
std::string num_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += num(xs[i]);
  }
  return out;
}

void require_increasing(const std::vector<std::int64_t>& v, const char* msg) {
  for (std::size_t i = 1; i < v.size(); ++i) require(v[i] > v[i - 1], msg);
}

/* Ceiling with a small guard so values that are integers up to float noise
 * (e.g. n^{1/(K+2)} at n = 2^{K+2}) do not round up a full step. */
std::int64_t guarded_ceil(double v) { return std::llround(std::ceil(v - 1e-9)); }

/* Runs body(i) for i in [0, count), fanned across workers. Work items write
 * only to their own index, so the result is identical for any worker count;
 * the first exception is rethrown after the pool drains. */
template <typename F>
void parallel_for_index(std::size_t count, int workers, F&& body) {
  std::size_t w = workers < 1 ? 1 : static_cast<std::size_t>(workers);
  w = std::min(w, count);
  if (w <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/* 95% two-sample KS critical scale for equal sample sizes; distances at or
 * below this are indistinguishable from sampling noise. */
double ks_noise_floor(std::size_t replicas) {
  return 1.3581 * std::sqrt(2.0 / static_cast<double>(replicas));
}

struct BootstrapCi {
  double lo = 0;
  double hi = 0;
};

/* Percentile bootstrap over replica means: resample rows within each n,
 * refit the log-log slope. `samples[i]` are the per-replica observables at
 * n_grid[i]; all entries must be positive. */
BootstrapCi bootstrap_slope_ci(const std::vector<std::vector<double>>& samples,
                               const std::vector<double>& log_n, std::size_t rounds,
                               RngStream& rng) {
  std::vector<double> slopes;
  slopes.reserve(rounds);
  std::vector<double> log_means(samples.size());
  for (std::size_t b = 0; b < rounds; ++b) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& xs = samples[i];
      const double r = static_cast<double>(xs.size());
      double sum = 0.0;
      for (std::size_t draw = 0; draw < xs.size(); ++draw) {
        auto idx = static_cast<std::size_t>(rng.uniform01() * r);
        if (idx >= xs.size()) idx = xs.size() - 1;
        sum += xs[idx];
      }
      log_means[i] = std::log(sum / r);
    }
    slopes.push_back(linear_fit(log_n, log_means).slope);
  }
  return {quantile(slopes, 0.025), quantile(slopes, 0.975)};
}

/* Bootstrap standard error of a quantile of `xs`. */
double quantile_se(const std::vector<double>& xs, double p, std::size_t rounds,
                   RngStream& rng) {
  std::vector<double> qs;
  qs.reserve(rounds);
  std::vector<double> resample(xs.size());
  for (std::size_t b = 0; b < rounds; ++b) {
    for (auto& v : resample) {
      auto idx = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(xs.size()));
      if (idx >= xs.size()) idx = xs.size() - 1;
      v = xs[idx];
    }
    qs.push_back(quantile(resample, p));
  }
  return summarize(qs).count >= 2 ? std::sqrt(summarize(qs).variance) : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------

ConvergenceStudy convergence_study(const ConvergenceConfig& cfg, std::uint64_t master_seed) {
  require(cfg.K >= 1, "convergence_study: K must be >= 1");
  require(cfg.gamma.size() == static_cast<std::size_t>(cfg.K),
          "convergence_study: gamma must have K entries");
  require(!cfg.n_grid.empty(), "convergence_study: n_grid must not be empty");
  require_increasing(cfg.n_grid, "convergence_study: n_grid must be increasing");
  require(cfg.replicas >= 2, "convergence_study: need at least two replicas");
  require(!cfg.observation_times.empty(),
          "convergence_study: observation_times must not be empty");
  require(cfg.observation_times.front() > 0.0,
          "convergence_study: observation times must be positive");
  for (std::size_t j = 1; j < cfg.observation_times.size(); ++j) {
    require(cfg.observation_times[j] > cfg.observation_times[j - 1],
            "convergence_study: observation times must be increasing");
  }
  require(cfg.a1_initial > 0.0, "convergence_study: a1_initial must be positive");
  require(cfg.sde_dt > 0.0 && std::isfinite(cfg.sde_dt),
          "convergence_study: sde_dt must be positive");
  require(cfg.ks_threshold > 0.0, "convergence_study: ks_threshold must be positive");

  const int K = cfg.K;
  const std::size_t R = cfg.replicas;
  const std::size_t J = cfg.observation_times.size();
  const std::size_t n_count = cfg.n_grid.size();

  ConvergenceStudy out;
  StudyReport& rep = out.report;
  rep.study_kind = "convergence";
  rep.master_seed = master_seed;
  rep.replica_count = R;
  rep.add_parameter("K", num(static_cast<std::int64_t>(K)));
  rep.add_parameter("gamma", num_list(cfg.gamma));
  rep.add_parameter("n_grid", num_list(cfg.n_grid));
  rep.add_parameter("replicas", num(static_cast<std::int64_t>(R)));
  rep.add_parameter("observation_times", num_list(cfg.observation_times));
  rep.add_parameter("a1_initial", num(cfg.a1_initial));
  rep.add_parameter("sde_dt", num(cfg.sde_dt));
  rep.add_parameter("ks_threshold", num(cfg.ks_threshold));
  rep.add_parameter("workers", num(static_cast<std::int64_t>(cfg.workers)));

  const double floor = ks_noise_floor(R);
  if (R < 1000) {
    rep.warnings.push_back(
        "fewer than 1000 replicas: KS distances at this size are dominated by sampling noise");
  }
  if (cfg.ks_threshold < floor) {
    rep.warnings.push_back(
        "ks_threshold lies below the two-sample noise floor for this replica count; the "
        "convergence verdict cannot be certified");
  }

  std::vector<std::string> columns;
  columns.reserve(J * static_cast<std::size_t>(K + 2));
  for (double tj : cfg.observation_times) {
    for (int k = 0; k <= K + 1; ++k) {
      columns.push_back("A_" + std::to_string(k) + "(t=" + num(tj) + ")");
    }
  }
  const std::size_t n_cols = columns.size();

  // Rescaled chain ensembles, one per population size.
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    const std::int64_t n = cfg.n_grid[ni];
    const ScalingConstants c = scaling_constants(Regime::intermediate, n, K);
    if (c.boundary_warning) rep.warnings.push_back(c.warning);
    const auto [delta, eps] = perturbations_for_gamma(cfg.gamma, c);
    const ModelParams params{n, K, delta, eps};
    std::int64_t a1 = std::llround(cfg.a1_initial * c.alpha[1]);
    if (a1 < 1) a1 = 1;
    require(a1 <= n, "convergence_study: initial stage-1 count exceeds the population");
    const PopulationState init = initial_with_stage1(params, a1);

    std::vector<double> raw_times;
    raw_times.reserve(J);
    for (double tj : cfg.observation_times) raw_times.push_back(c.tau * tj);
    const StopRule stop = StopRule::at_time(raw_times.back());
    const RecordRule record = RecordRule::at_times(raw_times);

    ReplicaTable table;
    table.columns = columns;
    table.rows.assign(R, {});
    parallel_for_index(R, cfg.workers, [&](std::size_t r) {
      const RngSeed seed{master_seed, compose_stream(kCtmcComponent, ni, r)};
      const Trajectory traj = simulate_path(params, init, stop, seed, record);
      std::vector<double> row;
      row.reserve(n_cols);
      for (std::size_t j = 0; j < J; ++j) {
        for (int k = 0; k <= K + 1; ++k) {
          row.push_back(RescaledView::rescale_state(traj.states[j], c, k));
        }
      }
      table.rows[r] = std::move(row);
    });
    out.ctmc_samples.push_back(std::move(table));
  }

  // Limit ensemble of the same size.
  {
    SdeSpec spec{K, cfg.gamma, SdeVariant::intermediate};
    std::vector<double> init(static_cast<std::size_t>(K) + 2, 0.0);
    init[1] = cfg.a1_initial;
    const SdeConfig sconf{cfg.sde_dt, cfg.observation_times.back()};
    std::vector<std::size_t> obs_index;
    obs_index.reserve(J);
    for (double tj : cfg.observation_times) {
      obs_index.push_back(static_cast<std::size_t>(std::llround(tj / cfg.sde_dt)));
    }
    out.sde_samples.columns = columns;
    out.sde_samples.rows.assign(R, {});
    parallel_for_index(R, cfg.workers, [&](std::size_t r) {
      const RngSeed seed{master_seed, compose_stream(kSdeComponent, 0, r)};
      const DiffusionPath path = integrate_sde(spec, init, sconf, seed);
      std::vector<double> row;
      row.reserve(n_cols);
      for (std::size_t j : obs_index) {
        const std::size_t jj = std::min(j, path.values.size() - 1);
        for (int k = 0; k <= K + 1; ++k) {
          row.push_back(path.values[jj][static_cast<std::size_t>(k)]);
        }
      }
      out.sde_samples.rows[r] = std::move(row);
    });
  }

  // KS distances: consecutive population sizes, and each size against the limit.
  std::vector<std::vector<std::vector<double>>> ctmc_cols(n_count);
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    for (std::size_t ccol = 0; ccol < n_cols; ++ccol) {
      ctmc_cols[ni].push_back(out.ctmc_samples[ni].column(ccol));
    }
  }
  std::vector<std::vector<double>> sde_cols;
  for (std::size_t ccol = 0; ccol < n_cols; ++ccol) {
    sde_cols.push_back(out.sde_samples.column(ccol));
  }
  for (std::size_t ccol = 0; ccol < n_cols; ++ccol) {
    for (std::size_t ni = 0; ni + 1 < n_count; ++ni) {
      const KsResult ks = ks_two_sample(ctmc_cols[ni][ccol], ctmc_cols[ni + 1][ccol]);
      out.distances.push_back({columns[ccol], "consecutive", cfg.n_grid[ni],
                               cfg.n_grid[ni + 1], ks.statistic, ks.p_value});
    }
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      const KsResult ks = ks_two_sample(ctmc_cols[ni][ccol], sde_cols[ccol]);
      out.distances.push_back(
          {columns[ccol], "sde", cfg.n_grid[ni], 0, ks.statistic, ks.p_value});
    }
  }

  // Verdict: the stochastic coordinate at the last observation time must
  // approach the limit monotonically and land below the threshold.
  const std::size_t verdict_col = (J - 1) * static_cast<std::size_t>(K + 2) + 1;
  std::vector<double> to_limit(n_count);
  for (const KsEntry& e : out.distances) {
    if (e.kind != "sde" || e.column != columns[verdict_col]) continue;
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      if (cfg.n_grid[ni] == e.n_a) to_limit[ni] = e.statistic;
    }
  }
  bool decreasing = true;
  for (std::size_t ni = 0; ni + 1 < n_count; ++ni) {
    if (to_limit[ni + 1] >= to_limit[ni]) decreasing = false;
  }
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    rep.add("ks_to_limit " + columns[verdict_col] + " n=" + num(cfg.n_grid[ni]),
            to_limit[ni], floor, R);
  }
  for (const KsEntry& e : out.distances) {
    if (e.kind == "consecutive" && e.column == columns[verdict_col]) {
      rep.add("ks_consecutive " + e.column + " n=" + num(e.n_a) + "|" + num(e.n_b),
              e.statistic, floor, R);
    }
  }
  rep.has_verdict = true;
  rep.verdict = decreasing && to_limit.back() < cfg.ks_threshold;
  return out;
}

// ---------------------------------------------------------------------------

OutbreakStudy outbreak_scaling_fit(const OutbreakConfig& cfg, std::uint64_t master_seed) {
  require(cfg.K >= 1, "outbreak_scaling_fit: K must be >= 1");
  require(cfg.gamma.size() == static_cast<std::size_t>(cfg.K),
          "outbreak_scaling_fit: gamma must have K entries");
  require(cfg.n_grid.size() >= 3,
          "outbreak_scaling_fit: need at least 3 population sizes for the fit");
  require_increasing(cfg.n_grid, "outbreak_scaling_fit: n_grid must be increasing");
  require(cfg.replicas >= 1, "outbreak_scaling_fit: need at least one replica");
  require(cfg.bootstrap >= 2, "outbreak_scaling_fit: need at least two bootstrap rounds");

  const int K = cfg.K;
  const std::size_t R = cfg.replicas;
  const double target = static_cast<double>(K + 1) / static_cast<double>(K + 2);

  OutbreakStudy out;
  StudyReport& rep = out.report;
  rep.study_kind = "outbreak";
  rep.master_seed = master_seed;
  rep.replica_count = R;
  rep.add_parameter("K", num(static_cast<std::int64_t>(K)));
  rep.add_parameter("gamma", num_list(cfg.gamma));
  rep.add_parameter("n_grid", num_list(cfg.n_grid));
  rep.add_parameter("replicas", num(static_cast<std::int64_t>(R)));
  rep.add_parameter("bootstrap", num(static_cast<std::int64_t>(cfg.bootstrap)));
  rep.add_parameter("workers", num(static_cast<std::int64_t>(cfg.workers)));

  std::vector<std::vector<double>> terminals(cfg.n_grid.size());
  std::vector<double> log_n, log_mean;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::int64_t n = cfg.n_grid[ni];
    const ScalingConstants c = scaling_constants(Regime::intermediate, n, K);
    if (c.boundary_warning) rep.warnings.push_back(c.warning);
    const auto [delta, eps] = perturbations_for_gamma(cfg.gamma, c);
    const ModelParams params{n, K, delta, eps};
    const std::int64_t a1 = guarded_ceil(c.alpha[1]);
    const PopulationState init = initial_with_stage1(params, a1);
    const double scale = std::pow(static_cast<double>(n), target);

    std::vector<double>& sample = terminals[ni];
    sample.assign(R, 0.0);
    parallel_for_index(R, cfg.workers, [&](std::size_t r) {
      const RngSeed seed{master_seed, compose_stream(kCtmcComponent, ni, r)};
      const Trajectory traj = simulate_path(params, init, StopRule::absorption(), seed,
                                            RecordRule::at_times({0.0}));
      const std::int64_t removed = traj.final_state.a[static_cast<std::size_t>(K + 1)];
      require(removed >= a1,
              "outbreak_scaling_fit: terminal removed count below the initial infected count");
      sample[r] = static_cast<double>(removed);
    });

    ReplicaTable table;
    table.columns = {"terminal_removed", "terminal_rescaled"};
    table.rows.reserve(R);
    for (double v : sample) table.rows.push_back({v, v / scale});
    out.terminals.push_back(std::move(table));

    const SampleSummary s = summarize(sample);
    rep.add("mean_terminal n=" + num(n), s.mean, s.se, R);
    rep.add("mean_rescaled n=" + num(n), s.mean / scale, s.se / scale, R);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_mean.push_back(std::log(s.mean));
  }

  const LinearFit fit = linear_fit(log_n, log_mean);
  RngStream boot(master_seed, compose_stream(kBootstrapComponent, 0, 0));
  const BootstrapCi ci = bootstrap_slope_ci(terminals, log_n, cfg.bootstrap, boot);
  out.slope = fit.slope;
  out.ci_lo = ci.lo;
  out.ci_hi = ci.hi;

  rep.add("slope", fit.slope, fit.slope_se, R * cfg.n_grid.size());
  rep.add("slope_ci_lo", ci.lo, 0.0, cfg.bootstrap);
  rep.add("slope_ci_hi", ci.hi, 0.0, cfg.bootstrap);
  rep.add("target_exponent", target, 0.0, 0);
  rep.has_verdict = true;
  rep.verdict = ci.lo <= target && target <= ci.hi;
  return out;
}

// ---------------------------------------------------------------------------

CollapseStudy collapse_study(const CollapseConfig& cfg, std::uint64_t master_seed) {
  require(cfg.K >= 2, "collapse_study: K must be >= 2 (stage 1 must leave a remainder)");
  require(cfg.gamma.size() == static_cast<std::size_t>(cfg.K),
          "collapse_study: gamma must have K entries");
  require(!cfg.n_grid.empty(), "collapse_study: n_grid must not be empty");
  require_increasing(cfg.n_grid, "collapse_study: n_grid must be increasing");
  require(cfg.replicas >= 2, "collapse_study: need at least two replicas");
  require(cfg.window > 0.0 && std::isfinite(cfg.window),
          "collapse_study: window must be positive");
  require(cfg.ode_dt > 0.0 && cfg.ode_dt <= cfg.window,
          "collapse_study: ode_dt must lie in (0, window]");
  require(cfg.rank_alpha > 0.0 && cfg.rank_alpha < 1.0,
          "collapse_study: rank_alpha must lie in (0, 1)");

  const int K = cfg.K;
  const std::size_t R = cfg.replicas;

  CollapseStudy out;
  StudyReport& rep = out.report;
  rep.study_kind = "collapse";
  rep.master_seed = master_seed;
  rep.replica_count = R;
  rep.add_parameter("K", num(static_cast<std::int64_t>(K)));
  rep.add_parameter("gamma", num_list(cfg.gamma));
  rep.add_parameter("n_grid", num_list(cfg.n_grid));
  rep.add_parameter("replicas", num(static_cast<std::int64_t>(R)));
  rep.add_parameter("window", num(cfg.window));
  rep.add_parameter("ode_dt", num(cfg.ode_dt));
  rep.add_parameter("rank_alpha", num(cfg.rank_alpha));
  rep.add_parameter("workers", num(static_cast<std::int64_t>(cfg.workers)));

  const OdeGrid grid{cfg.ode_dt, cfg.window};

  std::vector<std::vector<double>> dev_by_n;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::int64_t n = cfg.n_grid[ni];
    const ScalingConstants c = scaling_constants(Regime::intermediate, n, K);
    if (c.boundary_warning) rep.warnings.push_back(c.warning);
    const auto [delta, eps] = perturbations_for_gamma(cfg.gamma, c);
    const ModelParams params{n, K, delta, eps};
    const std::int64_t a1 = guarded_ceil(c.alpha[1]);
    const PopulationState init = initial_with_stage1(params, a1);

    ReplicaTable table;
    table.columns = {"t0_rescaled", "deviation"};
    table.rows.assign(R, {});
    parallel_for_index(R, cfg.workers, [&](std::size_t r) {
      const RngSeed seed{master_seed, compose_stream(kCtmcComponent, ni, r)};
      const Trajectory traj =
          simulate_path(params, init, StopRule::absorption(), seed, RecordRule::events());

      // First event index with stage 1 empty; absorption guarantees one exists.
      std::size_t i0 = 0;
      while (traj.states[i0].a[1] != 0) ++i0;
      const double t0_raw = traj.times[i0];

      const std::vector<double> A0 = RescaledView::rescale_state(traj.states[i0], c);
      std::vector<double> x0;
      x0.reserve(static_cast<std::size_t>(K) + 1);
      x0.push_back(A0[0]);
      for (int k = 2; k <= K + 1; ++k) x0.push_back(A0[static_cast<std::size_t>(k)]);
      const OdeSolution sol = integrate_ode(x0, ForcingPath::zero(), cfg.gamma, grid);

      // Sup-norm gap between the rescaled chain (piecewise constant) and the
      // deterministic flow over the window, relative to the flow's sup norm.
      double max_diff = 0.0;
      double max_ode = 0.0;
      std::size_t ptr = i0;
      for (std::size_t g = 0; g < sol.times.size(); ++g) {
        const double raw_target = t0_raw + sol.times[g] * c.tau;
        while (ptr + 1 < traj.times.size() && traj.times[ptr + 1] <= raw_target) ++ptr;
        const PopulationState& s = traj.states[ptr];
        for (std::size_t j = 0; j < sol.values[g].size(); ++j) {
          const int k = j == 0 ? 0 : static_cast<int>(j) + 1;
          const double a_val = RescaledView::rescale_state(s, c, k);
          const double o_val = sol.values[g][j];
          max_diff = std::max(max_diff, std::abs(a_val - o_val));
          max_ode = std::max(max_ode, std::abs(o_val));
        }
      }
      const double deviation = max_ode > 0.0 ? max_diff / max_ode : max_diff;
      table.rows[r] = {t0_raw / c.tau, deviation};
    });

    std::vector<double> devs = table.column(1);
    out.deviations.push_back(std::move(table));
    out.excluded.push_back(0);  // absorption runs always reach stage-1 extinction
    rep.add("excluded n=" + num(n), 0.0, 0.0, R);

    const SampleSummary s = summarize(devs);
    RngStream boot(master_seed, compose_stream(kBootstrapComponent, ni, 0));
    rep.add("deviation_mean n=" + num(n), s.mean, s.se, R);
    rep.add("deviation_median n=" + num(n), quantile(devs, 0.5),
            quantile_se(devs, 0.5, 200, boot), R);
    rep.add("deviation_q90 n=" + num(n), quantile(devs, 0.9),
            quantile_se(devs, 0.9, 200, boot), R);
    dev_by_n.push_back(std::move(devs));
  }

  bool all_below = true;
  for (std::size_t ni = 0; ni + 1 < cfg.n_grid.size(); ++ni) {
    const double p = mann_whitney_less(dev_by_n[ni + 1], dev_by_n[ni]);
    rep.add("rank_p smaller_at_n=" + num(cfg.n_grid[ni + 1]) +
                " vs_n=" + num(cfg.n_grid[ni]),
            p, 0.0, 2 * R);
    if (!(p < cfg.rank_alpha)) all_below = false;
  }
  if (cfg.n_grid.size() >= 2) {
    rep.has_verdict = true;
    rep.verdict = all_below;
  }
  return out;
}

CollapseStudy collapse_check(const CollapseConfig& cfg, std::uint64_t master_seed) {
  require(cfg.n_grid.size() == 1, "collapse_check: exactly one population size expected");
  return collapse_study(cfg, master_seed);
}

// ---------------------------------------------------------------------------

PartitionSample random_partition(const ModelParams& params, RngSeed seed) {
  params.validate();
  PartitionSample out;
  RngStream rng(seed);
  std::int64_t unexplored = params.n;
  while (unexplored > 0) {
    // By exchangeability the uniformly chosen seed case is any unexplored
    // individual; already-explored ones sit in the removed compartment and
    // only lower a_0 (the rate normalization keeps the full n).
    PopulationState init;
    init.a.assign(static_cast<std::size_t>(params.K) + 2, 0);
    init.a[0] = unexplored - 1;
    init.a[1] = 1;
    init.a[static_cast<std::size_t>(params.K) + 1] = params.n - unexplored;
    const Trajectory traj = simulate_path(params, init, StopRule::absorption(), rng, seed,
                                          RecordRule::at_times({0.0}));
    const std::int64_t rest = traj.final_state.a[0];
    out.block_sizes.push_back(unexplored - rest);  // the block: seed + everyone it reached
    out.block_counters.push_back(traj.ever_in_stage);
    unexplored = rest;
  }
  return out;
}

// ---------------------------------------------------------------------------

double conjectured_lambda(int K) {
  require(K >= 1, "conjectured_lambda: K must be >= 1");
  const double p = std::pow(2.0, K);
  return (p - 1.0) / (static_cast<double>(K + 1) * p - 1.0);
}

ConjectureStudy conjecture_exponents(const ConjectureConfig& cfg, std::uint64_t master_seed) {
  require(cfg.K >= 1, "conjecture_exponents: K must be >= 1");
  require(cfg.n_grid.size() >= 2,
          "conjecture_exponents: need at least two population sizes to fit");
  require_increasing(cfg.n_grid, "conjecture_exponents: n_grid must be increasing");
  require(cfg.replicas >= 2, "conjecture_exponents: need at least two replicas");
  require(cfg.bootstrap >= 2, "conjecture_exponents: need at least two bootstrap rounds");

  const int K = cfg.K;
  const std::size_t R = cfg.replicas;
  const double lambda = conjectured_lambda(K);

  ConjectureStudy out;
  StudyReport& rep = out.report;
  rep.study_kind = "conjecture";
  rep.master_seed = master_seed;
  rep.replica_count = R;
  rep.add_parameter("K", num(static_cast<std::int64_t>(K)));
  rep.add_parameter("n_grid", num_list(cfg.n_grid));
  rep.add_parameter("replicas", num(static_cast<std::int64_t>(R)));
  rep.add_parameter("bootstrap", num(static_cast<std::int64_t>(cfg.bootstrap)));
  rep.add_parameter("partition_samples", num(static_cast<std::int64_t>(cfg.partition_samples)));
  rep.add_parameter("workers", num(static_cast<std::int64_t>(cfg.workers)));
  rep.notes.push_back(
      "stage-visit counters include the initial case in its starting stage; with a single "
      "stage-1 seed, a convention counting infections only would lower N_1 by exactly 1");

  // Single-case absorption runs; per-replica stage-visit counters.
  std::vector<std::string> columns;
  for (int k = 1; k <= K; ++k) columns.push_back("N_" + std::to_string(k));
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::int64_t n = cfg.n_grid[ni];
    const ModelParams params = ModelParams::critical(n, K);
    const PopulationState init = initial_with_stage1(params, 1);
    ReplicaTable table;
    table.columns = columns;
    table.rows.assign(R, {});
    parallel_for_index(R, cfg.workers, [&](std::size_t r) {
      const RngSeed seed{master_seed, compose_stream(kCtmcComponent, ni, r)};
      const Trajectory traj = simulate_path(params, init, StopRule::absorption(), seed,
                                            RecordRule::at_times({0.0}));
      std::vector<double> row(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) {
        row[static_cast<std::size_t>(k)] =
            static_cast<double>(traj.ever_in_stage[static_cast<std::size_t>(k)]);
      }
      table.rows[r] = std::move(row);
    });
    out.counters.push_back(std::move(table));
  }

  std::vector<double> log_n;
  for (std::int64_t n : cfg.n_grid) log_n.push_back(std::log(static_cast<double>(n)));

  for (int k = 1; k <= K; ++k) {
    std::vector<std::vector<double>> samples;
    std::vector<double> log_mean;
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      samples.push_back(out.counters[ni].column(static_cast<std::size_t>(k - 1)));
      const SampleSummary s = summarize(samples.back());
      rep.add("mean_count k=" + num(static_cast<std::int64_t>(k)) +
                  " n=" + num(cfg.n_grid[ni]),
              s.mean, s.se, R);
      log_mean.push_back(std::log(s.mean));
    }
    const LinearFit fit = linear_fit(log_n, log_mean);
    RngStream boot(master_seed,
                   compose_stream(kBootstrapComponent, static_cast<std::uint64_t>(k), 0));
    const BootstrapCi ci = bootstrap_slope_ci(samples, log_n, cfg.bootstrap, boot);

    out.fitted.push_back(fit.slope);
    out.ci_lo.push_back(ci.lo);
    out.ci_hi.push_back(ci.hi);

    const std::string suffix = " k=" + num(static_cast<std::int64_t>(k));
    rep.add("fitted_exponent" + suffix, fit.slope, 0.5 * (ci.hi - ci.lo),
            R * cfg.n_grid.size());
    rep.add("exponent_ci_lo" + suffix, ci.lo, 0.0, cfg.bootstrap);
    rep.add("exponent_ci_hi" + suffix, ci.hi, 0.0, cfg.bootstrap);
    rep.add("conjecture_exponent" + suffix, k * lambda, 0.0, 0);
    if (k == K) {
      rep.add("heuristic_exponent" + suffix,
              static_cast<double>(K) / static_cast<double>(K + 2), 0.0, 0);
    }
    if (ci.hi - ci.lo > cfg.heavy_tail_ci_width) {
      rep.warnings.push_back("heavy-tail flag: stage " + num(static_cast<std::int64_t>(k)) +
                             " exponent CI is wider than " + num(cfg.heavy_tail_ci_width));
    }
  }

  // Partition probe: size-biased block size vs the largest-block heuristic.
  if (cfg.partition_samples > 0) {
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const std::int64_t n = cfg.n_grid[ni];
      const ModelParams params = ModelParams::critical(n, K);
      std::vector<double> size_biased(cfg.partition_samples);
      std::vector<double> largest_sq(cfg.partition_samples);
      parallel_for_index(cfg.partition_samples, cfg.workers, [&](std::size_t s) {
        const RngSeed seed{master_seed, compose_stream(kPartitionComponent, ni, s)};
        const PartitionSample part = random_partition(params, seed);
        double sum_sq = 0.0;
        std::int64_t largest = 0;
        for (std::int64_t b : part.block_sizes) {
          sum_sq += static_cast<double>(b) * static_cast<double>(b);
          largest = std::max(largest, b);
        }
        size_biased[s] = sum_sq / static_cast<double>(n);
        largest_sq[s] =
            static_cast<double>(largest) * static_cast<double>(largest) / static_cast<double>(n);
      });
      const SampleSummary sb = summarize(size_biased);
      const SampleSummary lg = summarize(largest_sq);
      rep.add("size_biased_block_mean n=" + num(n), sb.mean, sb.se, cfg.partition_samples);
      rep.add("largest_block_sq_over_n n=" + num(n), lg.mean, lg.se, cfg.partition_samples);
      const double ratio = lg.mean / sb.mean;
      const double ratio_se =
          ratio * std::sqrt(std::pow(sb.se / sb.mean, 2) + std::pow(lg.se / lg.mean, 2));
      rep.add("largest_to_size_biased_ratio n=" + num(n), ratio, ratio_se,
              cfg.partition_samples);
    }
  }

  rep.has_verdict = false;  // evidence only: the growth-rate question stays open
  return out;
}

}  // namespace kstage
