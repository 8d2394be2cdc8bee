#include "kstage/model.hpp"

#include <cmath>
#include <string>

namespace kstage {

void ModelParams::validate() const {
  require(n >= 1, "ModelParams: n must be >= 1");
  require(K >= 1, "ModelParams: K must be >= 1");
  require(delta.size() == static_cast<std::size_t>(K),
          "ModelParams: delta must have K entries");
  require(epsilon.size() == static_cast<std::size_t>(K),
          "ModelParams: epsilon must have K entries");
  for (double d : delta) {
    require(std::isfinite(d) && d > -1.0, "ModelParams: delta entries must be finite and > -1");
  }
  for (double e : epsilon) {
    require(std::isfinite(e) && e > -1.0, "ModelParams: epsilon entries must be finite and > -1");
  }
}

void PopulationState::validate(const ModelParams& p) const {
  require(a.size() == static_cast<std::size_t>(p.K) + 2,
          "PopulationState: state must have K+2 coordinates");
  for (std::int64_t v : a) require(v >= 0, "PopulationState: coordinates must be nonnegative");
  require(total() == p.n, "PopulationState: coordinates must sum to n");
}

PopulationState initial_with_stage1(const ModelParams& p, std::int64_t m) {
  require(m >= 0 && m <= p.n, "initial_with_stage1: need 0 <= m <= n");
  PopulationState s;
  s.a.assign(static_cast<std::size_t>(p.K) + 2, 0);
  s.a[0] = p.n - m;
  s.a[1] = m;
  return s;
}

void transition_rates_into(const ModelParams& p, const PopulationState& s, RateVector& r) {
  r.progression.resize(static_cast<std::size_t>(p.K));
  r.infection.resize(static_cast<std::size_t>(p.K));
  r.progression_total = 0;
  r.infection_total = 0;
  const double a0_over_n = static_cast<double>(s.a[0]) / static_cast<double>(p.n);
  for (int k = 1; k <= p.K; ++k) {
    const double ak = static_cast<double>(s.a[static_cast<std::size_t>(k)]);
    const double prog = (1.0 + p.delta[static_cast<std::size_t>(k - 1)]) * ak;
    const double inf = (1.0 + p.epsilon[static_cast<std::size_t>(k - 1)]) * ak * a0_over_n;
    r.progression[static_cast<std::size_t>(k - 1)] = prog;
    r.infection[static_cast<std::size_t>(k - 1)] = inf;
    r.progression_total += prog;
    r.infection_total += inf;
  }
}

RateVector transition_rates(const ModelParams& p, const PopulationState& s) {
  require(s.a.size() == static_cast<std::size_t>(p.K) + 2,
          "transition_rates: state dimension does not match K");
  RateVector r;
  transition_rates_into(p, s, r);
  return r;
}

}  // namespace kstage
