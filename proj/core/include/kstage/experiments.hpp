#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kstage/model.hpp"
#include "kstage/rng.hpp"

namespace kstage {

/* One named scalar result. Every entry records the replica count behind it
 * and an uncertainty estimate (standard error or CI half-width; 0 for exact
 * constants such as theoretical targets). */
struct Statistic {
  std::string name;
  double value = 0.0;
  double uncertainty = 0.0;
  std::size_t replicas = 0;
};

/* Common result envelope: configuration echo, named statistics, and the
 * master seed that reproduces the run bit-exactly. */
struct StudyReport {
  std::string study_kind;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<Statistic> statistics;
  std::size_t replica_count = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  bool has_verdict = false;  // some studies only present evidence
  bool verdict = false;

  void add_parameter(std::string name, std::string value);
  void add(std::string name, double value, double uncertainty, std::size_t replicas);
  const Statistic* find(std::string_view name) const;  // nullptr when absent
};

/* Replica-by-column numeric table: the shape of the companion data files. */
struct ReplicaTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(std::size_t j) const;
};

// ---------------------------------------------------------------------------
// Weak-convergence probe: the rescaled chain against its diffusion limit.

struct ConvergenceConfig {
  int K = 1;
  std::vector<double> gamma;         // K entries
  std::vector<std::int64_t> n_grid;  // increasing population sizes
  std::size_t replicas = 10000;
  std::vector<double> observation_times = {1.0};  // rescaled, increasing, > 0
  double a1_initial = 1.0;  // target A_1(0); a_1(0) = round(a1_initial * alpha_1)
  double sde_dt = 1e-3;
  double ks_threshold = 0.05;  // "converged" bar at the largest n
  int workers = 1;
};

struct KsEntry {
  std::string column;  // observable, e.g. "A_1(t=1)"
  std::string kind;    // "consecutive" (n_a vs n_b) or "sde" (n_a vs the limit)
  std::int64_t n_a = 0;
  std::int64_t n_b = 0;  // 0 when kind = "sde"
  double statistic = 0.0;
  double p_value = 0.0;
};

struct ConvergenceStudy {
  StudyReport report;
  std::vector<ReplicaTable> ctmc_samples;  // one table per n; rows = replicas
  ReplicaTable sde_samples;
  std::vector<KsEntry> distances;
};

ConvergenceStudy convergence_study(const ConvergenceConfig& cfg, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Outbreak-size growth exponent.

struct OutbreakConfig {
  int K = 1;
  std::vector<double> gamma;         // K entries; zeros = critical
  std::vector<std::int64_t> n_grid;  // at least 3 values for a meaningful fit
  std::size_t replicas = 1000;
  std::size_t bootstrap = 1000;
  int workers = 1;
};

struct OutbreakStudy {
  StudyReport report;
  /* Per n: rows (terminal removed count, terminal / n^{(K+1)/(K+2)}). */
  std::vector<ReplicaTable> terminals;
  double slope = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

OutbreakStudy outbreak_scaling_fit(const OutbreakConfig& cfg, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Post-extinction determinism: once stage 1 dies out, the rescaled chain
// should track the unforced ODE started from its state at that moment.

struct CollapseConfig {
  int K = 2;                         // >= 2
  std::vector<double> gamma;         // K entries
  std::vector<std::int64_t> n_grid;  // increasing; rank tests need >= 2
  std::size_t replicas = 1000;
  double window = 1.0;  // rescaled time window after T_0(a_1)
  double ode_dt = 1e-3;
  double rank_alpha = 0.01;
  int workers = 1;
};

struct CollapseStudy {
  StudyReport report;
  std::vector<ReplicaTable> deviations;  // per n: rows (t0_rescaled, deviation)
  std::vector<std::size_t> excluded;     // per n (horizon runs only; 0 here)
};

/* Deviation distribution for each n plus one-sided rank tests between
 * consecutive n values (larger n should deviate stochastically less). */
CollapseStudy collapse_study(const CollapseConfig& cfg, std::uint64_t master_seed);

/* Single-n form: cfg.n_grid must hold exactly one value. */
CollapseStudy collapse_check(const CollapseConfig& cfg, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Random partition of {1..n}: repeatedly seed one epidemic in the unexplored
// set; each outbreak's ever-infected set is one block.

struct PartitionSample {
  std::vector<std::int64_t> block_sizes;                  // sums exactly to n
  std::vector<std::vector<std::int64_t>> block_counters;  // per block: stages 1..K
};

PartitionSample random_partition(const ModelParams& params, RngSeed seed);

// ---------------------------------------------------------------------------
// Growth exponents of the stage-visit counts from a single initial case,
// with both candidate predictions reported side by side.

struct ConjectureConfig {
  int K = 1;
  std::vector<std::int64_t> n_grid;  // increasing; >= 2 values
  std::size_t replicas = 10000;
  std::size_t bootstrap = 1000;
  std::size_t partition_samples = 100;  // per n; 0 disables the partition probe
  double heavy_tail_ci_width = 0.2;     // exponent CI wider than this is flagged
  int workers = 1;
};

struct ConjectureStudy {
  StudyReport report;
  std::vector<ReplicaTable> counters;  // per n: rows of N_1..N_K
  std::vector<double> fitted;          // per k = 1..K: fitted exponent
  std::vector<double> ci_lo, ci_hi;    // per k
};

ConjectureStudy conjecture_exponents(const ConjectureConfig& cfg, std::uint64_t master_seed);

/* lambda_K = (2^K - 1) / ((K+1) 2^K - 1); stage k's visit count is
 * conjectured to grow like n^{k lambda_K}. */
double conjectured_lambda(int K);

}  // namespace kstage
