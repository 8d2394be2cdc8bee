#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "kstage/errors.hpp"
#include "kstage/experiments.hpp"

using kstage::collapse_check;
using kstage::CollapseConfig;
using kstage::CollapseStudy;
using kstage::conjecture_exponents;
using kstage::ConjectureConfig;
using kstage::ConjectureStudy;
using kstage::convergence_study;
using kstage::ConvergenceConfig;
using kstage::ConvergenceStudy;
using kstage::ModelParams;
using kstage::outbreak_scaling_fit;
using kstage::OutbreakConfig;
using kstage::OutbreakStudy;
using kstage::random_partition;
using kstage::RngSeed;
using kstage::StudyReport;

namespace {

/* Equality up to the echoed worker count, which is the one configuration
 * value allowed to differ between runs that must agree. */
void check_same_report(const StudyReport& a, const StudyReport& b) {
  CHECK(a.study_kind == b.study_kind);
  auto without_workers = [](const StudyReport& r) {
    std::vector<std::pair<std::string, std::string>> ps;
    for (const auto& p : r.parameters) {
      if (p.first != "workers") ps.push_back(p);
    }
    return ps;
  };
  CHECK(without_workers(a) == without_workers(b));
  REQUIRE(a.statistics.size() == b.statistics.size());
  for (std::size_t i = 0; i < a.statistics.size(); ++i) {
    CHECK(a.statistics[i].name == b.statistics[i].name);
    CHECK(a.statistics[i].value == b.statistics[i].value);
    CHECK(a.statistics[i].uncertainty == b.statistics[i].uncertainty);
    CHECK(a.statistics[i].replicas == b.statistics[i].replicas);
  }
  CHECK(a.warnings == b.warnings);
  CHECK(a.has_verdict == b.has_verdict);
  CHECK(a.verdict == b.verdict);
}

void check_same_table(const kstage::ReplicaTable& a, const kstage::ReplicaTable& b) {
  CHECK(a.columns == b.columns);
  CHECK(a.rows == b.rows);
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("random partitions cover the population exactly") {
  for (std::int64_t n : {1, 2, 50}) {
    for (int K : {1, 2}) {
      ModelParams p = ModelParams::critical(n, K);
      kstage::PartitionSample part = random_partition(p, RngSeed{17, static_cast<std::uint64_t>(n)});
      std::int64_t total = std::accumulate(part.block_sizes.begin(), part.block_sizes.end(),
                                           std::int64_t{0});
      CHECK(total == n);
      REQUIRE(part.block_counters.size() == part.block_sizes.size());
      for (std::size_t b = 0; b < part.block_sizes.size(); ++b) {
        CHECK(part.block_sizes[b] >= 1);
        REQUIRE(part.block_counters[b].size() == static_cast<std::size_t>(K));
        for (std::int64_t c : part.block_counters[b]) CHECK(c >= 1);
        // everyone ever infected passes through the final stage
        CHECK(part.block_counters[b].back() == part.block_sizes[b]);
      }
    }
  }

  ModelParams single = ModelParams::critical(1, 2);
  kstage::PartitionSample part = random_partition(single, RngSeed{17, 99});
  REQUIRE(part.block_sizes.size() == 1);
  CHECK(part.block_sizes[0] == 1);
  CHECK(part.block_counters[0] == std::vector<std::int64_t>{1, 1});

  kstage::PartitionSample again = random_partition(single, RngSeed{17, 99});
  CHECK(again.block_sizes == part.block_sizes);
  CHECK(again.block_counters == part.block_counters);
}

TEST_CASE("conjectured growth rates") {
  CHECK(kstage::conjectured_lambda(1) == doctest::Approx(1.0 / 3.0));
  CHECK(kstage::conjectured_lambda(2) == doctest::Approx(3.0 / 11.0));
  CHECK(kstage::conjectured_lambda(3) == doctest::Approx(7.0 / 31.0));
  CHECK_THROWS_AS(kstage::conjectured_lambda(0), kstage::contract_error);
}

TEST_CASE("convergence study: shape, warnings, and worker invariance") {
  ConvergenceConfig cfg;
  cfg.K = 1;
  cfg.gamma = {0.0};
  cfg.n_grid = {200, 800};
  cfg.replicas = 300;
  cfg.observation_times = {0.5};
  cfg.sde_dt = 5e-3;
  cfg.workers = 1;
  ConvergenceStudy st = convergence_study(cfg, 42);

  CHECK(st.report.study_kind == "convergence");
  REQUIRE(st.ctmc_samples.size() == 2);
  CHECK(st.ctmc_samples[0].rows.size() == 300);
  CHECK(st.sde_samples.rows.size() == 300);
  CHECK(st.ctmc_samples[0].columns == st.sde_samples.columns);
  CHECK(st.ctmc_samples[0].columns.size() == 3);  // A_0, A_1, A_2 at one time

  // one consecutive pair + two limit comparisons per observable column
  CHECK(st.distances.size() == 3 * (1 + 2));
  for (const kstage::KsEntry& e : st.distances) {
    CHECK((e.kind == "consecutive" || e.kind == "sde"));
    if (e.kind == "sde") CHECK(e.n_b == 0);
    CHECK(e.statistic >= 0.0);
    CHECK(e.statistic <= 1.0);
    CHECK(e.p_value >= 0.0);
    CHECK(e.p_value <= 1.0);
  }

  CHECK(st.report.find("ks_to_limit A_1(t=0.5) n=800") != nullptr);
  CHECK(st.report.find("ks_consecutive A_1(t=0.5) n=200|800") != nullptr);
  CHECK(st.report.has_verdict);
  // 300 replicas sit above the certification bar, so a warning must be raised
  CHECK(!st.report.warnings.empty());

  ConvergenceStudy same = convergence_study(cfg, 42);
  check_same_report(st.report, same.report);
  check_same_table(st.ctmc_samples[0], same.ctmc_samples[0]);

  cfg.workers = 3;
  ConvergenceStudy par = convergence_study(cfg, 42);
  check_same_report(st.report, par.report);
  for (std::size_t i = 0; i < st.ctmc_samples.size(); ++i) {
    check_same_table(st.ctmc_samples[i], par.ctmc_samples[i]);
  }
  check_same_table(st.sde_samples, par.sde_samples);
  REQUIRE(st.distances.size() == par.distances.size());
  for (std::size_t i = 0; i < st.distances.size(); ++i) {
    CHECK(st.distances[i].statistic == par.distances[i].statistic);
  }

  ConvergenceStudy other = convergence_study(cfg, 43);
  CHECK(st.ctmc_samples[0].rows != other.ctmc_samples[0].rows);
}

TEST_CASE("convergence study contract errors") {
  ConvergenceConfig cfg;
  cfg.K = 1;
  cfg.gamma = {0.0};
  cfg.n_grid = {};
  CHECK_THROWS_AS(convergence_study(cfg, 1), kstage::contract_error);
  cfg.n_grid = {100, 100};
  CHECK_THROWS_AS(convergence_study(cfg, 1), kstage::contract_error);
  cfg.n_grid = {100};
  cfg.gamma = {0.0, 0.0};
  CHECK_THROWS_AS(convergence_study(cfg, 1), kstage::contract_error);
  cfg.gamma = {0.0};
  cfg.observation_times = {0.5, 0.25};
  CHECK_THROWS_AS(convergence_study(cfg, 1), kstage::contract_error);
}

TEST_CASE("outbreak fit: table layout, fit fields, worker invariance") {
  OutbreakConfig cfg;
  cfg.K = 1;
  cfg.gamma = {0.0};
  cfg.n_grid = {256, 512, 1024};
  cfg.replicas = 80;
  cfg.bootstrap = 150;
  cfg.workers = 1;
  OutbreakStudy st = outbreak_scaling_fit(cfg, 7);

  CHECK(st.report.study_kind == "outbreak");
  REQUIRE(st.terminals.size() == 3);
  for (std::size_t ni = 0; ni < 3; ++ni) {
    const auto& tbl = st.terminals[ni];
    REQUIRE(tbl.columns.size() == 2);
    CHECK(tbl.rows.size() == 80);
    const double scale = std::pow(static_cast<double>(cfg.n_grid[ni]), 2.0 / 3.0);
    for (const auto& row : tbl.rows) {
      CHECK(row[0] >= 1.0);  // at least the seed is removed
      CHECK(row[1] == doctest::Approx(row[0] / scale).epsilon(1e-12));
    }
  }
  CHECK(st.ci_lo < st.ci_hi);
  CHECK(st.report.find("slope") != nullptr);
  CHECK(st.report.find("slope_ci_lo") != nullptr);
  CHECK(st.report.find("target_exponent") != nullptr);
  CHECK(st.report.find("target_exponent")->value == doctest::Approx(2.0 / 3.0));
  CHECK(st.report.has_verdict);

  cfg.workers = 2;
  OutbreakStudy par = outbreak_scaling_fit(cfg, 7);
  check_same_report(st.report, par.report);
  CHECK(st.slope == par.slope);
  CHECK(st.ci_lo == par.ci_lo);
  CHECK(st.ci_hi == par.ci_hi);

  cfg.n_grid = {256, 512};
  CHECK_THROWS_AS(outbreak_scaling_fit(cfg, 7), kstage::contract_error);
  cfg.n_grid = {256, 512, 1024};
  cfg.replicas = 0;
  CHECK_THROWS_AS(outbreak_scaling_fit(cfg, 7), kstage::contract_error);
}

TEST_CASE("collapse study: deviations recorded per n with rank comparisons") {
  CollapseConfig cfg;
  cfg.K = 2;
  cfg.gamma = {0.0, 0.0};
  cfg.n_grid = {400, 1600};
  cfg.replicas = 50;
  cfg.window = 0.5;
  cfg.ode_dt = 1e-2;
  cfg.workers = 1;
  CollapseStudy st = kstage::collapse_study(cfg, 11);

  CHECK(st.report.study_kind == "collapse");
  REQUIRE(st.deviations.size() == 2);
  REQUIRE(st.excluded.size() == 2);
  CHECK(st.excluded[0] == 0);
  for (const auto& tbl : st.deviations) {
    CHECK(tbl.rows.size() == 50);
    REQUIRE(tbl.columns.size() == 2);
    for (const auto& row : tbl.rows) {
      CHECK(row[0] >= 0.0);  // extinction instant
      CHECK(row[1] >= 0.0);  // sup-deviation over the window
    }
  }
  CHECK(st.report.find("deviation_mean n=400") != nullptr);
  CHECK(st.report.find("deviation_median n=1600") != nullptr);
  CHECK(st.report.find("rank_p smaller_at_n=1600 vs_n=400") != nullptr);
  CHECK(st.report.has_verdict);

  cfg.workers = 3;
  CollapseStudy par = kstage::collapse_study(cfg, 11);
  check_same_report(st.report, par.report);
  check_same_table(st.deviations[1], par.deviations[1]);

  SUBCASE("single-n check variant") {
    CollapseConfig one = cfg;
    one.n_grid = {400};
    one.workers = 1;
    CollapseStudy ck = collapse_check(one, 11);
    CHECK(ck.deviations.size() == 1);
    CHECK_FALSE(ck.report.has_verdict);

    one.n_grid = {400, 800};
    CHECK_THROWS_AS(collapse_check(one, 11), kstage::contract_error);
  }

  SUBCASE("K = 1 leaves nothing behind and is rejected") {
    CollapseConfig bad = cfg;
    bad.K = 1;
    bad.gamma = {0.0};
    CHECK_THROWS_AS(kstage::collapse_study(bad, 11), kstage::contract_error);
  }
}

TEST_CASE("conjecture study: exponents, candidate targets, evidence-only report") {
  ConjectureConfig cfg;
  cfg.K = 2;
  cfg.n_grid = {128, 512};
  cfg.replicas = 200;
  cfg.bootstrap = 100;
  cfg.partition_samples = 5;
  cfg.workers = 1;
  ConjectureStudy st = conjecture_exponents(cfg, 23);

  CHECK(st.report.study_kind == "conjecture");
  REQUIRE(st.counters.size() == 2);
  CHECK(st.counters[0].columns == std::vector<std::string>{"N_1", "N_2"});
  CHECK(st.counters[0].rows.size() == 200);
  for (const auto& row : st.counters[0].rows) {
    CHECK(row[0] >= 1.0);  // the seed counts in its starting stage
    CHECK(row[1] >= 1.0);
  }
  REQUIRE(st.fitted.size() == 2);
  CHECK(st.ci_lo.size() == 2);

  const kstage::Statistic* conj1 = st.report.find("conjecture_exponent k=1");
  REQUIRE(conj1 != nullptr);
  CHECK(conj1->value == doctest::Approx(3.0 / 11.0));
  const kstage::Statistic* conj2 = st.report.find("conjecture_exponent k=2");
  REQUIRE(conj2 != nullptr);
  CHECK(conj2->value == doctest::Approx(6.0 / 11.0));
  const kstage::Statistic* heur = st.report.find("heuristic_exponent k=2");
  REQUIRE(heur != nullptr);
  CHECK(heur->value == doctest::Approx(0.5));
  CHECK(st.report.find("heuristic_exponent k=1") == nullptr);
  CHECK(st.report.find("fitted_exponent k=1") != nullptr);
  CHECK(st.report.find("largest_to_size_biased_ratio n=512") != nullptr);
  CHECK_FALSE(st.report.has_verdict);
  REQUIRE(!st.report.notes.empty());
  CHECK(st.report.notes[0].find("initial case") != std::string::npos);

  cfg.workers = 2;
  ConjectureStudy par = conjecture_exponents(cfg, 23);
  check_same_report(st.report, par.report);
  check_same_table(st.counters[0], par.counters[0]);

  cfg.n_grid = {128};
  CHECK_THROWS_AS(conjecture_exponents(cfg, 23), kstage::contract_error);
}

}  // TEST_SUITE
