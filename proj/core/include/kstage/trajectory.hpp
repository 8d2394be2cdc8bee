#pragma once

#include <limits>
#include <span>
#include <vector>

#include "kstage/model.hpp"
#include "kstage/rng.hpp"

namespace kstage {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class StopKind {
  absorption,         // run until no one is infected
  horizon,            // run until a fixed time T
  stage1_extinction,  // run until a_1 hits 0
};

struct StopRule {
  StopKind kind = StopKind::absorption;
  double horizon = kInfinity;  // used by StopKind::horizon only

  static StopRule absorption() { return {StopKind::absorption, kInfinity}; }
  static StopRule at_time(double T) { return {StopKind::horizon, T}; }
  static StopRule stage1_extinction() { return {StopKind::stage1_extinction, kInfinity}; }
};

/* What simulate_path stores. Full mode keeps every event; grid mode samples
 * the path at fixed times (exact values, piecewise-constant, no
 * interpolation) and is the memory-bounded choice for large studies. */
struct RecordRule {
  bool full = true;
  std::vector<double> grid;  // grid mode: sorted, nonnegative sample times

  static RecordRule events() { return {true, {}}; }
  static RecordRule at_times(std::vector<double> times) { return {false, std::move(times)}; }
};

struct Trajectory {
  ModelParams params;
  RngSeed seed;
  StopKind stop = StopKind::absorption;

  /* Row i is the state at times[i]. Full mode: times[0] = 0 and each later
   * row is one event (paths are right-continuous, so the row at an event
   * time holds the post-jump state). Grid mode: rows are the requested
   * sample times. */
  bool event_resolved = true;
  std::vector<double> times;
  std::vector<PopulationState> states;

  PopulationState final_state;  // state when the stop rule fired
  double final_time = 0;        // absorption/stage1: last event time; horizon: T

  /* First time a_1 = 0 (+inf if never observed before the stop). */
  double t0_stage1 = kInfinity;

  /* ever_in_stage[k-1] counts individuals that were ever in stage k,
   * k = 1..K. Initial infecteds count toward their starting stage. */
  std::vector<std::int64_t> ever_in_stage;

  /* Checks conservation, monotone a_0 / a_{K+1}, increasing times, and (in
   * full mode) that consecutive rows differ by one legal transition. */
  void validate() const;
};

Trajectory simulate_path(const ModelParams& params, const PopulationState& init,
                         const StopRule& stop, RngSeed seed,
                         const RecordRule& record = RecordRule::events());

/* Continuation form: draws from an existing stream instead of opening a new
 * one, so a sequence of runs can share one stream deterministically (the
 * partition sampler relies on this). `recorded_seed` is stored on the
 * trajectory for provenance; reproducing the run requires replaying the
 * whole sequence. */
Trajectory simulate_path(const ModelParams& params, const PopulationState& init,
                         const StopRule& stop, RngStream& rng, RngSeed recorded_seed,
                         const RecordRule& record = RecordRule::events());

enum class Direction { down_to, up_to };

/* First time the given coordinate is <= (down_to) or >= (up_to) the
 * threshold; +inf if that never happens before the stop. Piecewise-constant
 * in full mode; grid resolution in grid mode. */
double hitting_time(const Trajectory& traj, int coordinate, std::int64_t threshold,
                    Direction dir);

/* Same search on a sampled real-valued path. */
double hitting_time(std::span<const double> times, std::span<const double> values,
                    double threshold, Direction dir);

/* Last time the coordinate is positive: sup{t : a_k(t) > 0}. Returns +inf
 * when the path ends positive and 0 when it is never positive. */
double last_exit_time(const Trajectory& traj, int coordinate);

/* Restarts the clock at time t and drops coordinate 1, re-indexing stages
 * 2..K+1 as 1..K of a (K-1)-stage model with the corresponding parameter
 * slices. Requires K >= 2, a full-mode trajectory, a_1(t) = 0, and (for
 * horizon runs) t <= T. Stage counters are rebuilt for the suffix. */
Trajectory shift_and_project(const Trajectory& traj, double t);

}  // namespace kstage
