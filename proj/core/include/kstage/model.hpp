#pragma once

#include <cstdint>
#include <vector>

#include "kstage/errors.hpp"

namespace kstage {

/* Finite-population epidemic with K infection stages.
 *
 * State a = (a_0, a_1, ..., a_{K+1}): a_0 susceptible, a_k infected at stage
 * k (1 <= k <= K), a_{K+1} removed. Total population is n. Two event types,
 * for each stage k = 1..K:
 *   progression  a -> a - e_k + e_{k+1}   at rate (1 + delta_k) a_k
 *   infection    a -> a - e_0 + e_k       at rate (1 + eps_k) a_k a_0 / n
 * A fresh infection enters at the infecting individual's current stage.
 * delta = epsilon = 0 is the critical chain. */
struct ModelParams {
  std::int64_t n = 0;
  int K = 0;
  std::vector<double> delta;    // size K, entries > -1
  std::vector<double> epsilon;  // size K, entries > -1

  static ModelParams critical(std::int64_t n, int K) {
    return {n, K, std::vector<double>(static_cast<std::size_t>(K), 0.0),
            std::vector<double>(static_cast<std::size_t>(K), 0.0)};
  }

  void validate() const;
};

struct PopulationState {
  std::vector<std::int64_t> a;  // size K+2

  std::int64_t total() const {
    std::int64_t s = 0;
    for (std::int64_t v : a) s += v;
    return s;
  }
  /* Infected mass: stages 1..K. */
  std::int64_t infected() const {
    std::int64_t s = 0;
    for (std::size_t k = 1; k + 1 < a.size(); ++k) s += a[k];
    return s;
  }

  void validate(const ModelParams& p) const;
};

/* State with a_1(0) = m infected at stage 1 and everyone else susceptible. */
PopulationState initial_with_stage1(const ModelParams& p, std::int64_t m);

struct RateVector {
  std::vector<double> progression;  // size K, stage k at index k-1
  std::vector<double> infection;    // size K
  double progression_total = 0;
  double infection_total = 0;
  double total() const { return progression_total + infection_total; }
};

/* Event rates of the chain in the given state. Zero total iff no one is
 * infected (the absorbing set). */
RateVector transition_rates(const ModelParams& p, const PopulationState& s);

/* Same computation into reused storage, no validation: the simulator's
 * per-event path. */
void transition_rates_into(const ModelParams& p, const PopulationState& s, RateVector& r);

}  // namespace kstage
