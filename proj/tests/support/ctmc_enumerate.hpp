#pragma once

/* Exact first-step analysis for tiny chains, used as an independent oracle
 * against Monte Carlo estimates. Walks the full transition graph with
 * memoization; every event strictly decreases
 *   phi(a) = sum_{k=0}^{K} (K+1-k) a_k
 * (progression by 1, infection at stage k by k), so the recursion is over a
 * finite DAG and terminates. Feasible only for very small n / K. */

#include <cstdint>
#include <map>
#include <vector>

#include "kstage/model.hpp"

namespace kstage_test {

/* E[number of infection events that enter stages 1..`stage`] from `init`.
 * Over a run to absorption everyone who enters below a stage later
 * progresses through it, so the ever-in-stage count N_stage is this plus
 * the initial cases at or upstream of that stage. */
class InfectionEntryCount {
 public:
  InfectionEntryCount(const kstage::ModelParams& params, int stage)
      : params_(params), stage_(stage) {}

  double expected(const kstage::PopulationState& state) {
    auto it = memo_.find(state.a);
    if (it != memo_.end()) return it->second;
    kstage::RateVector r = kstage::transition_rates(params_, state);
    double total = r.total();
    double value = 0.0;
    if (total > 0.0) {
      for (int k = 1; k <= params_.K; ++k) {
        std::size_t i = static_cast<std::size_t>(k - 1);
        if (r.progression[i] > 0.0) {
          kstage::PopulationState next = state;
          --next.a[static_cast<std::size_t>(k)];
          ++next.a[static_cast<std::size_t>(k) + 1];
          value += r.progression[i] / total * expected(next);
        }
        if (r.infection[i] > 0.0) {
          kstage::PopulationState next = state;
          --next.a[0];
          ++next.a[static_cast<std::size_t>(k)];
          value += r.infection[i] / total * ((k <= stage_ ? 1.0 : 0.0) + expected(next));
        }
      }
    }
    memo_.emplace(state.a, value);
    return value;
  }

 private:
  kstage::ModelParams params_;
  int stage_;
  std::map<std::vector<std::int64_t>, double> memo_;
};

/* E[N_stage] over a run to absorption: initial cases at stages <= stage plus
 * expected infection events entering at stages <= stage. */
inline double expected_stage_count(const kstage::ModelParams& params,
                                   const kstage::PopulationState& init, int stage) {
  InfectionEntryCount counter(params, stage);
  double upstream = 0.0;
  for (int j = 1; j <= stage; ++j) upstream += static_cast<double>(init.a[static_cast<std::size_t>(j)]);
  return upstream + counter.expected(init);
}

}  // namespace kstage_test
