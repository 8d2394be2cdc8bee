#pragma once

#include "kstage/scaling.hpp"

namespace kstage {

/* Per-coordinate decomposition of the rescaled chain
 *   A_k(t) = A_k(0) + V_k(t) + M_k(t),   k = 0..K+1,
 * where V_k is the predictable drift part (integrated event rates weighted
 * by rescaled jump sizes) and M_k is a martingale with predictable
 * quadratic variation <M_k>. Knowing the paths are piecewise constant makes
 * the time integrals exact sums, so V and <M> carry no quadrature error.
 *
 * With the boundary conventions delta_0 = delta_{K+1} = eps_{K+1} = -1:
 *   V_0(t)   = (tau/alpha_0) sum_k (1+eps_k) alpha_k
 *              * int_0^t (1 - alpha_0 A_0/n) A_k du
 *   V_k(t)   = int_0^t [ (1+delta_{k-1}) A_{k-1}
 *              + tau (eps_k - delta_k) A_k
 *              - (tau alpha_0 / n)(1+eps_k) A_0 A_k ] du,   k = 1..K+1
 *   <M_k>(t) = V_k(t)/alpha_k + 2 (tau/alpha_k)(1+delta_k) int_0^t A_k du
 */
struct CompensatorPaths {
  ScalingConstants constants;
  std::vector<double> times;  // rescaled event times; first entry 0
  std::vector<std::vector<double>> drift;                // [k][row] = V_k
  std::vector<std::vector<double>> quadratic_variation;  // [k][row] = <M_k>
  std::vector<std::vector<double>> martingale;           // [k][row] = M_k
};

CompensatorPaths compensator_paths(const Trajectory& traj, const ScalingConstants& c);

/* The same three quantities evaluated at one rescaled time t, exact on
 * [0, final_time/tau]. */
struct CompensatorSample {
  std::vector<double> drift, quadratic_variation, martingale;
};

CompensatorSample compensators_at(const Trajectory& traj, const ScalingConstants& c, double t);

}  // namespace kstage
