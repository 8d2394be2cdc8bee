/* Acceptance gate: ten end-to-end checks, one process invocation per
 * criterion (argv[1] = "C1".."C10") or all of them with no arguments.
 * Each criterion prints exactly one [PASS]/[FAIL] line; the exit status is
 * 0 only when every executed criterion passed. All tolerances and budgets
 * are pinned here as constants. */

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "../support/ctmc_enumerate.hpp"
#include "cli_config.hpp"
#include "dispatch.hpp"
#include "kstage/compensator.hpp"
#include "kstage/experiments.hpp"
#include "kstage/io.hpp"
#include "kstage/model.hpp"
#include "kstage/ode.hpp"
#include "kstage/scaling.hpp"
#include "kstage/sde.hpp"
#include "kstage/stats.hpp"
#include "kstage/trajectory.hpp"

namespace {

using kstage::ModelParams;
using kstage::PopulationState;
using kstage::Regime;
using kstage::RngSeed;
using kstage::ScalingConstants;
using kstage::Trajectory;

// ---- pinned tolerances and budgets -----------------------------------------
constexpr std::uint64_t kMasterSeed = 916873;
constexpr double kC1BudgetSec = 60.0;
constexpr std::size_t kC1Runs = 10000;

constexpr double kC2OracleTol = 1e-12;
constexpr std::size_t kC2Replicas = 100000;
constexpr double kC2SigmaBand = 3.0;

constexpr double kC3BudgetSec = 600.0;
constexpr std::size_t kC3Replicas = 10000;
constexpr double kC3MeanBand = 4.0;  // |mean M_k| <= band * SE
constexpr double kC3VarBand = 5.0;   // |var(M_1) - mean<M_1>| <= band * SE

constexpr double kC4BudgetSec = 120.0;
constexpr std::size_t kC4Replicas = 10000;
constexpr double kC4SigmaBand = 3.0;
constexpr double kC4ExtinctMin = 0.999;
constexpr double kC4ExtinctHorizon = 20.0;

constexpr double kC5BudgetSec = 1800.0;
constexpr std::size_t kC5Replicas = 10000;
constexpr double kC5Threshold = 0.05;

constexpr double kC6BudgetSec = 3600.0;
constexpr std::size_t kC6Replicas = 1000;
constexpr std::size_t kC6Bootstrap = 1000;
constexpr double kC6BandK1Lo = 0.62, kC6BandK1Hi = 0.72, kC6TargetK1 = 2.0 / 3.0;
/* The K=2 rescaled terminal mean approaches its limit (~1.54) slowly and
 * non-monotonically, which tilts a log-log fit of the mean by more than the
 * bootstrap CI width at reachable n. The fitted slope is therefore held to a
 * band, and the sharper requirement is distributional: the rescaled terminal
 * sample at the largest n must match an ensemble drawn from the limit
 * diffusion itself. */
constexpr double kC6BandK2Lo = 0.70, kC6BandK2Hi = 0.80;
constexpr double kC6K2KsMax = 0.10;  // wrong limit laws sit at 0.3+
constexpr std::size_t kC6SdeReplicas = 4000;

constexpr int kC7Cases = 50;
constexpr double kC7RelTol = 1e-6;
constexpr double kC7Horizon = 10.0;
constexpr double kC7Dt = 2.5e-4;

constexpr double kC8BudgetSec = 1800.0;
constexpr std::size_t kC8Replicas = 1000;
constexpr double kC8RankAlpha = 0.01;

constexpr double kC9BudgetSec = 3600.0;
/* Visit counts from one initial case are heavy-tailed, so the K=1 leg uses a
 * wide n range (2^12..2^22, one octave pairs apart) and a large replica
 * count; the small-n transient otherwise tilts the fitted exponent above the
 * CI width. The CI must cover the conjectured 1/3 AND stay narrow enough to
 * mean something. */
constexpr std::size_t kC9ReplicasK1 = 40000;
constexpr std::size_t kC9ReplicasK2 = 10000;
constexpr std::size_t kC9Bootstrap = 1000;
constexpr double kC9TargetK1 = 1.0 / 3.0;
constexpr double kC9MaxCiHalfWidth = 0.05;

// -----------------------------------------------------------------------------

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- C1: pathwise conservation laws -----------------------------------------
Outcome c1_chain_invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t n = 1000;
  const double scales[] = {0.0, 0.5, -0.5};
  std::size_t violations = 0;
  std::size_t runs_done = 0;
  for (int K = 1; K <= 3; ++K) {
    const std::size_t runs = kC1Runs / 3 + (K == 1 ? kC1Runs % 3 : 0);
    const ScalingConstants c = kstage::scaling_constants(Regime::intermediate, n, K);
    for (std::size_t r = 0; r < runs; ++r) {
      const std::vector<double> gamma(static_cast<std::size_t>(K), scales[r % 3]);
      const auto [delta, eps] = kstage::perturbations_for_gamma(gamma, c);
      const ModelParams params{n, K, delta, eps};
      const PopulationState init =
          kstage::initial_with_stage1(params, std::llround(c.alpha[1]));
      const Trajectory traj = kstage::simulate_path(
          params, init, kstage::StopRule::absorption(),
          RngSeed{kMasterSeed, kstage::compose_stream(1, static_cast<std::uint64_t>(K), r)});
      ++runs_done;

      std::int64_t prev_a0 = traj.states.front().a[0];
      std::int64_t prev_last = traj.states.front().a.back();
      for (const PopulationState& s : traj.states) {
        if (s.total() != n) ++violations;
        if (s.a[0] > prev_a0) ++violations;
        if (s.a.back() < prev_last) ++violations;
        prev_a0 = s.a[0];
        prev_last = s.a.back();
      }
      if (traj.final_state.infected() != 0) ++violations;
    }
  }
  const double el = seconds_since(t0);
  Outcome out;
  out.passed = violations == 0 && el <= kC1BudgetSec;
  out.detail = fmt("%zu absorption runs (K=1..3, n=%lld), %zu invariant violations, %.1fs",
                   runs_done, static_cast<long long>(n), violations, el);
  return out;
}

// ---- C2: exact two-node mean vs Monte Carlo ---------------------------------
Outcome c2_two_node_mean() {
  const ModelParams params = ModelParams::critical(2, 1);
  const PopulationState init = kstage::initial_with_stage1(params, 1);
  const double oracle = kstage_test::expected_stage_count(params, init, 1);
  if (std::abs(oracle - 4.0 / 3.0) > kC2OracleTol) {
    return {false, fmt("enumeration oracle drifted: %.15f vs 4/3", oracle)};
  }
  double sum = 0, sum2 = 0;
  for (std::size_t r = 0; r < kC2Replicas; ++r) {
    const Trajectory traj =
        kstage::simulate_path(params, init, kstage::StopRule::absorption(),
                              RngSeed{kMasterSeed, kstage::compose_stream(1, 20, r)});
    const double v = static_cast<double>(traj.ever_in_stage[0]);
    sum += v;
    sum2 += v * v;
  }
  const double R = static_cast<double>(kC2Replicas);
  const double mean = sum / R;
  const double se = std::sqrt((sum2 / R - mean * mean) / R);
  Outcome out;
  out.passed = std::abs(mean - oracle) <= kC2SigmaBand * se;
  out.detail = fmt("oracle %.12f, MC mean %.5f +- %.5f over %zu replicas (|z| = %.2f)",
                   oracle, mean, se, kC2Replicas, std::abs(mean - oracle) / se);
  return out;
}

// ---- C3: martingale terms vanish in mean; bracket predicts the variance -----
Outcome c3_martingale_nullity() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t n = 10000;
  const int K = 2;
  const ModelParams params = ModelParams::critical(n, K);
  const ScalingConstants c = kstage::scaling_constants(Regime::intermediate, n, K);
  const PopulationState init =
      kstage::initial_with_stage1(params, std::llround(c.alpha[1]));
  const double t_obs = 1.0;

  std::vector<double> s1(static_cast<std::size_t>(K) + 2, 0.0);
  std::vector<double> s2(static_cast<std::size_t>(K) + 2, 0.0);
  double m1_3 = 0, m1_4 = 0, qv1 = 0, qv1_2 = 0;
  for (std::size_t r = 0; r < kC3Replicas; ++r) {
    const Trajectory traj =
        kstage::simulate_path(params, init, kstage::StopRule::at_time(t_obs * c.tau),
                              RngSeed{kMasterSeed, kstage::compose_stream(1, 30, r)});
    const kstage::CompensatorSample cs = kstage::compensators_at(traj, c, t_obs);
    for (std::size_t k = 0; k < s1.size(); ++k) {
      s1[k] += cs.martingale[k];
      s2[k] += cs.martingale[k] * cs.martingale[k];
    }
    const double m = cs.martingale[1];
    m1_3 += m * m * m;
    m1_4 += m * m * m * m;
    qv1 += cs.quadratic_variation[1];
    qv1_2 += cs.quadratic_variation[1] * cs.quadratic_variation[1];
  }
  const double R = static_cast<double>(kC3Replicas);
  bool means_ok = true;
  double worst_z = 0;
  for (std::size_t k = 0; k < s1.size(); ++k) {
    const double mean = s1[k] / R;
    const double se = std::sqrt((s2[k] / R - mean * mean) / R);
    const double z = std::abs(mean) / se;
    worst_z = std::max(worst_z, z);
    if (z > kC3MeanBand) means_ok = false;
  }
  const double mean1 = s1[1] / R;
  const double var1 = s2[1] / R - mean1 * mean1;
  const double qv_mean = qv1 / R;
  // Var(sample variance) via the fourth central moment, plus the bracket's
  // own mean uncertainty.
  const double e2 = s2[1] / R, e3 = m1_3 / R, e4 = m1_4 / R;
  const double c4 = e4 - 4 * mean1 * e3 + 6 * mean1 * mean1 * e2 - 3 * std::pow(mean1, 4);
  const double se_var = std::sqrt(std::max(c4 - var1 * var1, 0.0) / R +
                                  (qv1_2 / R - qv_mean * qv_mean) / R);
  const bool var_ok = std::abs(var1 - qv_mean) <= kC3VarBand * se_var;
  const double el = seconds_since(t0);
  Outcome out;
  out.passed = means_ok && var_ok && el <= kC3BudgetSec;
  out.detail = fmt("worst |mean/SE| = %.2f over %zu coords; var(M_1) %.4f vs bracket %.4f "
                   "(gap %.2f SE); %zu replicas, %.1fs",
                   worst_z, s1.size(), var1, qv_mean, std::abs(var1 - qv_mean) / se_var,
                   kC3Replicas, el);
  return out;
}

// ---- C4: Euler scheme tracks the exponential mean and dies when subcritical -
Outcome c4_diffusion_mean_extinction() {
  const auto t0 = std::chrono::steady_clock::now();
  const kstage::SdeConfig cfg{1e-3, 2.0};
  const std::size_t idx[] = {500, 1000, 2000};
  const double ts[] = {0.5, 1.0, 2.0};
  bool means_ok = true;
  double worst_z = 0;
  for (double gamma : {-1.0, 0.0, 1.0}) {
    const kstage::SdeSpec spec{1, {gamma}, kstage::SdeVariant::feller};
    double sum[3] = {0, 0, 0}, sum2[3] = {0, 0, 0};
    for (std::size_t r = 0; r < kC4Replicas; ++r) {
      const kstage::DiffusionPath path = kstage::integrate_sde(
          spec, {0.0, 1.0, 0.0}, cfg,
          RngSeed{kMasterSeed,
                  kstage::compose_stream(2, static_cast<std::uint64_t>(gamma + 2), r)});
      for (int j = 0; j < 3; ++j) {
        const double v = path.values[idx[j]][1];
        sum[j] += v;
        sum2[j] += v * v;
      }
    }
    for (int j = 0; j < 3; ++j) {
      const double R = static_cast<double>(kC4Replicas);
      const double mean = sum[j] / R;
      const double se = std::sqrt((sum2[j] / R - mean * mean) / R);
      const double z = std::abs(mean - std::exp(gamma * ts[j])) / se;
      worst_z = std::max(worst_z, z);
      if (z > kC4SigmaBand) means_ok = false;
    }
  }
  std::size_t extinct = 0;
  const kstage::SdeSpec sub{1, {-1.0}, kstage::SdeVariant::feller};
  for (std::size_t r = 0; r < kC4Replicas; ++r) {
    const kstage::DiffusionPath path =
        kstage::integrate_sde(sub, {0.0, 1.0, 0.0}, {1e-3, kC4ExtinctHorizon},
                              RngSeed{kMasterSeed, kstage::compose_stream(2, 9, r)});
    if (path.t0_coordinate1 < kC4ExtinctHorizon + 1) ++extinct;
  }
  const double frac = static_cast<double>(extinct) / static_cast<double>(kC4Replicas);
  const double el = seconds_since(t0);
  Outcome out;
  out.passed = means_ok && frac > kC4ExtinctMin && el <= kC4BudgetSec;
  out.detail = fmt("worst |z| = %.2f across 9 (gamma, t) means; extinction by t=%.0f: %.4f; "
                   "%zu replicas, %.1fs",
                   worst_z, kC4ExtinctHorizon, frac, kC4Replicas, el);
  return out;
}

// ---- C5: rescaled chain converges to its diffusion limit --------------------
Outcome c5_limit_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  kstage::ConvergenceConfig cfg;
  cfg.K = 1;
  cfg.gamma = {0.0};
  cfg.n_grid = {1000, 10000, 100000};
  cfg.replicas = kC5Replicas;
  cfg.observation_times = {1.0};
  cfg.sde_dt = 1e-3;
  cfg.ks_threshold = kC5Threshold;
  cfg.workers = 1;
  const kstage::ConvergenceStudy st = kstage::convergence_study(cfg, kMasterSeed);

  std::vector<double> dist(cfg.n_grid.size(), -1.0);
  for (const kstage::KsEntry& e : st.distances) {
    if (e.kind != "sde" || e.column != "A_1(t=1)") continue;
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
      if (e.n_a == cfg.n_grid[i]) dist[i] = e.statistic;
    }
  }
  const bool decreasing = dist[0] > dist[1] && dist[1] > dist[2];
  const bool small_enough = dist[2] < kC5Threshold;
  const double el = seconds_since(t0);
  Outcome out;
  out.passed = st.report.verdict && decreasing && small_enough && el <= kC5BudgetSec;
  out.detail = fmt("KS(A_1(1)) to the limit: %.4f -> %.4f -> %.4f over n = 1e3, 1e4, 1e5 "
                   "(bar %.2f); %zu replicas each, %.0fs",
                   dist[0], dist[1], dist[2], kC5Threshold, kC5Replicas, el);
  return out;
}

// ---- C6: terminal outbreak size grows with the predicted exponent -----------
Outcome c6_outbreak_exponent() {
  const auto t0 = std::chrono::steady_clock::now();
  auto run = [](int K, int p_lo, int p_hi) {
    kstage::OutbreakConfig cfg;
    cfg.K = K;
    cfg.gamma.assign(static_cast<std::size_t>(K), 0.0);
    for (int p = p_lo; p <= p_hi; ++p) cfg.n_grid.push_back(std::int64_t{1} << p);
    cfg.replicas = kC6Replicas;
    cfg.bootstrap = kC6Bootstrap;
    cfg.workers = 1;
    return kstage::outbreak_scaling_fit(cfg, kMasterSeed + static_cast<std::uint64_t>(K));
  };
  const kstage::OutbreakStudy s1 = run(1, 10, 17);
  const kstage::OutbreakStudy s2 = run(2, 12, 18);

  const bool k1_ok = s1.slope >= kC6BandK1Lo && s1.slope <= kC6BandK1Hi &&
                     s1.ci_lo <= kC6TargetK1 && kC6TargetK1 <= s1.ci_hi;

  std::vector<double> limit_sample(kC6SdeReplicas);
  const kstage::SdeSpec spec{2, {0.0, 0.0}, kstage::SdeVariant::intermediate};
  for (std::size_t r = 0; r < kC6SdeReplicas; ++r) {
    limit_sample[r] = kstage::terminal_outbreak(
                          spec, {0.0, 1.0, 0.0, 0.0}, kstage::TerminalConfig{},
                          RngSeed{kMasterSeed, kstage::compose_stream(2, 6, r)})
                          .value;
  }
  const kstage::KsResult ks =
      kstage::ks_two_sample(s2.terminals.back().column(1), limit_sample);
  const bool k2_ok =
      s2.slope >= kC6BandK2Lo && s2.slope <= kC6BandK2Hi && ks.statistic < kC6K2KsMax;

  const double el = seconds_since(t0);
  Outcome out;
  out.passed = k1_ok && k2_ok && el <= kC6BudgetSec;
  out.detail = fmt("K=1 slope %.4f CI [%.4f, %.4f] (target 2/3); K=2 slope %.4f in "
                   "[%.2f, %.2f], rescaled terminal at n=2^18 vs the limit law: KS %.4f "
                   "(bar %.2f); %.0fs",
                   s1.slope, s1.ci_lo, s1.ci_hi, s2.slope, kC6BandK2Lo, kC6BandK2Hi,
                   ks.statistic, kC6K2KsMax, el);
  return out;
}

// ---- C7: closed form equals the integrator without forcing ------------------
Outcome c7_closed_form_agreement() {
  kstage::RngStream gen(kMasterSeed, kstage::compose_stream(3, 7, 0));
  double worst = 0;
  int worst_case = -1;
  for (int i = 0; i < kC7Cases; ++i) {
    const int K = 2 + i % 3;
    std::vector<double> gamma(static_cast<std::size_t>(K));
    for (double& g : gamma) g = 2.0 * gen.uniform01() - 1.0;
    std::vector<double> init(static_cast<std::size_t>(K) + 1);
    init[0] = 0.5 * gen.uniform01();
    for (std::size_t j = 1; j < init.size(); ++j) init[j] = gen.uniform01();

    const kstage::OdeGrid grid{kC7Dt, kC7Horizon};
    const kstage::OdeSolution rk =
        kstage::integrate_ode(init, kstage::ForcingPath::zero(), gamma, grid);
    const kstage::OdeSolution cf = kstage::closed_form_y0(init, gamma, grid);
    double sup_diff = 0, sup_cf = 0;
    for (std::size_t row = 0; row < rk.rows(); ++row) {
      for (std::size_t j = 0; j < rk.values[row].size(); ++j) {
        sup_diff = std::max(sup_diff, std::abs(rk.values[row][j] - cf.values[row][j]));
        sup_cf = std::max(sup_cf, std::abs(cf.values[row][j]));
      }
    }
    const double rel = sup_diff / sup_cf;
    if (rel > worst) {
      worst = rel;
      worst_case = i;
    }
  }
  Outcome out;
  out.passed = worst < kC7RelTol;
  out.detail = fmt("%d random cases (K in {2,3,4}) on [0, %.0f]: worst relative sup gap "
                   "%.2e (case %d, bar %.0e)",
                   kC7Cases, kC7Horizon, worst, worst_case, kC7RelTol);
  return out;
}

// ---- C8: post-extinction paths hug the deterministic flow more tightly ------
Outcome c8_post_extinction_collapse() {
  const auto t0 = std::chrono::steady_clock::now();
  kstage::CollapseConfig cfg;
  cfg.K = 2;
  cfg.gamma = {0.0, 0.0};
  cfg.n_grid = {10000, 100000};
  cfg.replicas = kC8Replicas;
  cfg.window = 1.0;
  cfg.ode_dt = 1e-3;
  cfg.rank_alpha = kC8RankAlpha;
  cfg.workers = 1;
  const kstage::CollapseStudy st = kstage::collapse_study(cfg, kMasterSeed);
  const kstage::Statistic* p = st.report.find("rank_p smaller_at_n=100000 vs_n=10000");
  const kstage::Statistic* med_lo = st.report.find("deviation_median n=10000");
  const kstage::Statistic* med_hi = st.report.find("deviation_median n=100000");
  const double el = seconds_since(t0);
  Outcome out;
  if (p == nullptr || med_lo == nullptr || med_hi == nullptr) {
    out.detail = "expected statistics missing from the collapse report";
    return out;
  }
  out.passed = st.report.verdict && p->value < kC8RankAlpha && el <= kC8BudgetSec;
  out.detail = fmt("median deviation %.4f (n=1e4) vs %.4f (n=1e5); one-sided rank p = %.2e "
                   "(bar %.2f); %zu replicas each, %.0fs",
                   med_lo->value, med_hi->value, p->value, kC8RankAlpha, kC8Replicas, el);
  return out;
}

// ---- C9: stage-visit growth exponents against both candidate laws -----------
Outcome c9_visit_count_exponents() {
  const auto t0 = std::chrono::steady_clock::now();

  kstage::ConjectureConfig cfg;
  cfg.K = 1;
  for (int p = 12; p <= 22; p += 2) cfg.n_grid.push_back(std::int64_t{1} << p);
  cfg.replicas = kC9ReplicasK1;
  cfg.bootstrap = kC9Bootstrap;
  cfg.partition_samples = 0;
  cfg.workers = 1;
  const kstage::ConjectureStudy k1 = kstage::conjecture_exponents(cfg, kMasterSeed);
  const bool k1_ok = k1.ci_lo[0] <= kC9TargetK1 && kC9TargetK1 <= k1.ci_hi[0] &&
                     (k1.ci_hi[0] - k1.ci_lo[0]) / 2.0 <= kC9MaxCiHalfWidth;

  cfg.K = 2;
  cfg.n_grid.clear();
  for (int p = 10; p <= 16; ++p) cfg.n_grid.push_back(std::int64_t{1} << p);
  cfg.replicas = kC9ReplicasK2;
  const kstage::ConjectureStudy k2 = kstage::conjecture_exponents(cfg, kMasterSeed + 1);
  const kstage::Statistic* conj = k2.report.find("conjecture_exponent k=2");
  const kstage::Statistic* heur = k2.report.find("heuristic_exponent k=2");
  const kstage::Statistic* fit2 = k2.report.find("fitted_exponent k=2");
  const bool k2_emitted = conj != nullptr && heur != nullptr && fit2 != nullptr &&
                          std::abs(conj->value - 6.0 / 11.0) < 1e-12 &&
                          std::abs(heur->value - 0.5) < 1e-12;
  const double el = seconds_since(t0);
  Outcome out;
  out.passed = k1_ok && k2_emitted && el <= kC9BudgetSec;
  out.detail = fmt("K=1 fitted %.4f CI [%.4f, %.4f] vs 1/3; K=2 fitted %.4f CI [%.4f, %.4f] "
                   "beside candidates 6/11 and 1/2 (no bar); %.0fs",
                   k1.fitted[0], k1.ci_lo[0], k1.ci_hi[0], k2.fitted[1], k2.ci_lo[1],
                   k2.ci_hi[1], el);
  return out;
}

// ---- C10: a manifest replays its run byte for byte --------------------------
Outcome c10_manifest_reproducibility() {
  namespace fs = std::filesystem;
  using kstage::cli::parse_config;
  using kstage::cli::run_command;

  auto rerun_identical = [](const std::vector<std::string>& args, const std::string& tag,
                            std::string& report) {
    const fs::path a = fs::temp_directory_path() / ("kstage_c10_" + tag + "_a");
    const fs::path b = fs::temp_directory_path() / ("kstage_c10_" + tag + "_b");
    fs::remove_all(a);
    fs::remove_all(b);
    std::vector<std::string> first = args;
    first.push_back("--output-dir");
    first.push_back(a.string());
    run_command(parse_config(first));
    run_command(parse_config(
        {"--config", (a / "manifest.json").string(), "--output-dir", b.string()}));

    std::size_t compared = 0;
    bool same = true;
    for (const auto& entry : fs::directory_iterator(a)) {
      const std::string name = entry.path().filename().string();
      if (name == "manifest.json") continue;  // carries the wall-clock stamp
      std::ifstream fa(entry.path(), std::ios::binary);
      std::ifstream fb(b / name, std::ios::binary);
      std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
      std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
      if (!fb || ca != cb) same = false;
      ++compared;
    }
    report += fmt("%s%s: %zu files", report.empty() ? "" : "; ", tag.c_str(), compared);
    fs::remove_all(a);
    fs::remove_all(b);
    return same && compared > 0;
  };

  std::string report;
  const bool conv_ok = rerun_identical(
      {"study-convergence", "--K", "1", "--gamma", "0", "--n-grid", "200,400", "--replicas",
       "150", "--times", "0.5", "--seed", "77"},
      "convergence", report);
  const bool outb_ok = rerun_identical(
      {"study-outbreak", "--K", "1", "--gamma", "0", "--n-grid", "256,512,1024", "--replicas",
       "100", "--bootstrap", "200", "--seed", "78"},
      "outbreak", report);
  Outcome out;
  out.passed = conv_ok && outb_ok;
  out.detail = fmt("manifest replays byte-identical (%s)%s", report.c_str(),
                   out.passed ? "" : " -- MISMATCH");
  return out;
}

struct Criterion {
  const char* id;
  const char* name;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"C1", "chain invariants", c1_chain_invariants},
    {"C2", "two-node exact mean", c2_two_node_mean},
    {"C3", "martingale nullity", c3_martingale_nullity},
    {"C4", "diffusion mean and extinction", c4_diffusion_mean_extinction},
    {"C5", "limit convergence", c5_limit_convergence},
    {"C6", "outbreak exponent", c6_outbreak_exponent},
    {"C7", "closed-form agreement", c7_closed_form_agreement},
    {"C8", "post-extinction collapse", c8_post_extinction_collapse},
    {"C9", "visit-count exponents", c9_visit_count_exponents},
    {"C10", "manifest reproducibility", c10_manifest_reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  bool matched = false;
  bool all_passed = true;
  for (const Criterion& c : kCriteria) {
    if (!filter.empty() && filter != c.id) continue;
    matched = true;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = fmt("exception: %s", e.what());
    }
    std::printf("[%s] %s %s: %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
    all_passed = all_passed && o.passed;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s' (expected C1..C10)\n", filter.c_str());
    return 2;
  }
  return all_passed ? 0 : 1;
}
