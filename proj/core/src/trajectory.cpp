#include "kstage/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace kstage {

namespace {

bool is_sorted_strict(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

/* Classifies the difference between consecutive states as one legal event.
 * Returns the stage index 1..K and sets infection, or returns 0 when the
 * difference is not a single transition. */
int classify_event(const PopulationState& prev, const PopulationState& next, int K,
                   bool& infection) {
  int dec = -1, inc = -1;
  for (std::size_t i = 0; i < prev.a.size(); ++i) {
    std::int64_t d = next.a[i] - prev.a[i];
    if (d == -1 && dec == -1) {
      dec = static_cast<int>(i);
    } else if (d == 1 && inc == -1) {
      inc = static_cast<int>(i);
    } else if (d != 0) {
      return 0;
    }
  }
  if (dec == -1 || inc == -1) return 0;
  if (dec == 0 && inc >= 1 && inc <= K) {
    infection = true;
    return inc;
  }
  if (dec >= 1 && dec <= K && inc == dec + 1) {
    infection = false;
    return dec;
  }
  return 0;
}

}  // namespace

void Trajectory::validate() const {
  params.validate();
  require(times.size() == states.size(), "Trajectory: times/states size mismatch");
  require(!times.empty(), "Trajectory: empty");
  require(ever_in_stage.size() == static_cast<std::size_t>(params.K),
          "Trajectory: stage counter size mismatch");
  if (event_resolved) require(times.front() == 0.0, "Trajectory: first row must be t=0");
  require(is_sorted_strict(times), "Trajectory: times must be strictly increasing");
  for (const auto& s : states) s.validate(params);
  final_state.validate(params);
  const int Kp1 = params.K + 1;
  for (std::size_t i = 1; i < states.size(); ++i) {
    require(states[i].a[0] <= states[i - 1].a[0], "Trajectory: a_0 must be nonincreasing");
    require(states[i].a[static_cast<std::size_t>(Kp1)] >=
                states[i - 1].a[static_cast<std::size_t>(Kp1)],
            "Trajectory: a_{K+1} must be nondecreasing");
    if (event_resolved) {
      bool infection = false;
      require(classify_event(states[i - 1], states[i], params.K, infection) != 0,
              "Trajectory: consecutive states must differ by one legal transition");
    }
  }
  for (std::int64_t c : ever_in_stage) {
    require(c >= 0, "Trajectory: stage counters must be nonnegative");
  }
}

Trajectory simulate_path(const ModelParams& params, const PopulationState& init,
                         const StopRule& stop, RngSeed seed, const RecordRule& record) {
  RngStream rng(seed);
  return simulate_path(params, init, stop, rng, seed, record);
}

Trajectory simulate_path(const ModelParams& params, const PopulationState& init,
                         const StopRule& stop, RngStream& rng, RngSeed recorded_seed,
                         const RecordRule& record) {
  params.validate();
  init.validate(params);
  if (stop.kind == StopKind::horizon) {
    require(std::isfinite(stop.horizon) && stop.horizon >= 0.0,
            "simulate_path: horizon must be finite and nonnegative");
  }
  if (!record.full) {
    require(!record.grid.empty(), "simulate_path: empty observation grid");
    require(is_sorted_strict(record.grid), "simulate_path: grid must be strictly increasing");
    require(record.grid.front() >= 0.0, "simulate_path: grid times must be nonnegative");
    if (stop.kind == StopKind::horizon) {
      require(record.grid.back() <= stop.horizon,
              "simulate_path: grid extends past the horizon");
    }
  }

  const int K = params.K;
  Trajectory traj;
  traj.params = params;
  traj.seed = recorded_seed;
  traj.stop = stop.kind;
  traj.event_resolved = record.full;
  traj.ever_in_stage.assign(static_cast<std::size_t>(K), 0);
  for (int k = 1; k <= K; ++k) {
    traj.ever_in_stage[static_cast<std::size_t>(k - 1)] = init.a[static_cast<std::size_t>(k)];
  }

  PopulationState state = init;
  double t = 0.0;
  std::size_t next_grid = 0;  // grid mode: first unrecorded grid index

  if (record.full) {
    traj.times.push_back(0.0);
    traj.states.push_back(state);
  }
  if (state.a[1] == 0) traj.t0_stage1 = 0.0;

  RateVector rates;
  for (;;) {
    if (state.infected() == 0) break;  // absorbed: all rates vanish
    if (stop.kind == StopKind::stage1_extinction && state.a[1] == 0) break;

    transition_rates_into(params, state, rates);
    const double total = rates.total();
    // delta, epsilon > -1 and infected > 0 guarantee total > 0
    const double dt = rng.exponential() / total;
    double t_next = t + dt;
    if (t_next <= t) t_next = std::nextafter(t, kInfinity);
    if (stop.kind == StopKind::horizon && t_next > stop.horizon) break;

    // two categorical draws: event class first, then the stage within it
    const bool infection = rng.uniform01() * total >= rates.progression_total;
    const std::vector<double>& rv = infection ? rates.infection : rates.progression;
    const double class_total = infection ? rates.infection_total : rates.progression_total;
    double target = rng.uniform01() * class_total;
    int stage = 0;
    for (int k = 1; k <= K; ++k) {
      const double r = rv[static_cast<std::size_t>(k - 1)];
      if (r <= 0.0) continue;
      stage = k;
      target -= r;
      if (target <= 0.0) break;
    }
    // floating residue can run past the end; the last positive-rate stage wins

    if (!record.full) {
      while (next_grid < record.grid.size() && record.grid[next_grid] < t_next) {
        traj.times.push_back(record.grid[next_grid]);
        traj.states.push_back(state);
        ++next_grid;
      }
    }

    t = t_next;
    if (infection) {
      --state.a[0];
      ++state.a[static_cast<std::size_t>(stage)];
      ++traj.ever_in_stage[static_cast<std::size_t>(stage - 1)];
    } else {
      --state.a[static_cast<std::size_t>(stage)];
      ++state.a[static_cast<std::size_t>(stage + 1)];
      if (stage < K) ++traj.ever_in_stage[static_cast<std::size_t>(stage)];
    }
    if (state.a[1] == 0 && traj.t0_stage1 == kInfinity) traj.t0_stage1 = t;

    if (record.full) {
      traj.times.push_back(t);
      traj.states.push_back(state);
    }
  }

  traj.final_state = state;
  /* A horizon path is defined on all of [0, T] even when it absorbs early:
   * the absorbed state just persists. */
  traj.final_time = stop.kind == StopKind::horizon ? stop.horizon : t;
  if (!record.full) {
    // remaining grid points see the stop state (piecewise-constant extension)
    while (next_grid < record.grid.size()) {
      traj.times.push_back(record.grid[next_grid]);
      traj.states.push_back(state);
      ++next_grid;
    }
  }
  return traj;
}

double hitting_time(const Trajectory& traj, int coordinate, std::int64_t threshold,
                    Direction dir) {
  require(coordinate >= 0 && coordinate <= traj.params.K + 1,
          "hitting_time: coordinate out of range");
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const std::int64_t v = traj.states[i].a[static_cast<std::size_t>(coordinate)];
    if (dir == Direction::down_to ? v <= threshold : v >= threshold) return traj.times[i];
  }
  return kInfinity;
}

double hitting_time(std::span<const double> times, std::span<const double> values,
                    double threshold, Direction dir) {
  require(times.size() == values.size(), "hitting_time: times/values size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (dir == Direction::down_to ? values[i] <= threshold : values[i] >= threshold) {
      return times[i];
    }
  }
  return kInfinity;
}

double last_exit_time(const Trajectory& traj, int coordinate) {
  require(coordinate >= 0 && coordinate <= traj.params.K + 1,
          "last_exit_time: coordinate out of range");
  std::size_t n = traj.states.size();
  for (std::size_t i = n; i-- > 0;) {
    if (traj.states[i].a[static_cast<std::size_t>(coordinate)] > 0) {
      if (i + 1 == n) return kInfinity;
      return traj.times[i + 1];
    }
  }
  return 0.0;
}

Trajectory shift_and_project(const Trajectory& traj, double t) {
  require(traj.params.K >= 2, "shift_and_project: requires K >= 2");
  require(traj.event_resolved, "shift_and_project: requires a full event record");
  require(t >= 0.0, "shift_and_project: t must be nonnegative");
  if (traj.stop != StopKind::absorption) {
    require(t <= traj.final_time,
            "shift_and_project: t beyond the final time of a non-absorbing run");
  }

  const int K = traj.params.K;
  auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  const std::size_t at = static_cast<std::size_t>(it - traj.times.begin()) - 1;
  const PopulationState& here = traj.states[at];
  require(here.a[1] == 0, "shift_and_project: a_1(t) must be 0");

  auto project = [K](const PopulationState& s) {
    PopulationState out;
    out.a.reserve(static_cast<std::size_t>(K) + 1);
    out.a.push_back(s.a[0]);
    for (int k = 2; k <= K + 1; ++k) out.a.push_back(s.a[static_cast<std::size_t>(k)]);
    return out;
  };

  Trajectory out;
  out.params.n = traj.params.n;
  out.params.K = K - 1;
  out.params.delta.assign(traj.params.delta.begin() + 1, traj.params.delta.end());
  out.params.epsilon.assign(traj.params.epsilon.begin() + 1, traj.params.epsilon.end());
  out.seed = traj.seed;
  out.stop = traj.stop;
  out.event_resolved = true;

  out.times.push_back(0.0);
  out.states.push_back(project(here));
  out.ever_in_stage.assign(static_cast<std::size_t>(K - 1), 0);
  for (int j = 1; j <= K - 1; ++j) {
    out.ever_in_stage[static_cast<std::size_t>(j - 1)] =
        out.states[0].a[static_cast<std::size_t>(j)];
  }

  // a_1 = 0 admits no flow back into stage 1, so every suffix event is a
  // legal transition of the projected chain
  for (std::size_t i = at + 1; i < traj.times.size(); ++i) {
    if (!(traj.times[i] > t)) continue;
    out.times.push_back(traj.times[i] - t);
    out.states.push_back(project(traj.states[i]));
    for (int m = 2; m <= K; ++m) {
      if (traj.states[i].a[static_cast<std::size_t>(m)] >
          traj.states[i - 1].a[static_cast<std::size_t>(m)]) {
        ++out.ever_in_stage[static_cast<std::size_t>(m - 2)];  // entered old stage m = new m-1
      }
    }
  }

  out.final_state = project(traj.final_state);
  out.final_time = std::max(traj.final_time - t, 0.0);
  out.t0_stage1 = kInfinity;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    if (out.states[i].a[1] == 0) {
      out.t0_stage1 = out.times[i];
      break;
    }
  }
  return out;
}

}  // namespace kstage
