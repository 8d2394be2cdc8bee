#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kstage/trajectory.hpp"

namespace kstage {

/* Critical-window regimes, split by how the initial stage-1 mass alpha_1
 * compares with n^{1/(K+2)}:
 *   small         1 << alpha_1 << n^{1/(K+2)}   (no susceptible depletion)
 *   intermediate  alpha_1 = n^{1/(K+2)}         (depletion enters the drift)
 *   large         n^{1/(K+2)} << alpha_1 << n   (deterministic limit)
 */
enum class Regime { small, intermediate, large };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);

/* Time speed-up tau and per-coordinate scales alpha_0..alpha_{K+1} tied by
 *   alpha_0 = alpha_{K+1},  alpha_{k+1} = tau * alpha_k  (k = 1..K).
 * The rescaled path is
 *   A_0(t) = (n - a_0(tau t)) / alpha_0,   A_k(t) = a_k(tau t) / alpha_k. */
struct ScalingConstants {
  Regime regime = Regime::intermediate;
  std::int64_t n = 0;
  int K = 0;
  double tau = 1;
  std::vector<double> alpha;  // size K+2

  /* Set when alpha_1 sits within a factor 4 of a regime boundary; the
   * constants are still returned. */
  bool boundary_warning = false;
  std::string warning;

  void validate() const;
};

/* alpha1 is required for small/large and ignored for intermediate (which
 * derives alpha_1 = n^{1/(K+2)}). Strict inequalities at the given n decide
 * admissibility; proximity within a factor 4 of a boundary only warns. */
ScalingConstants scaling_constants(Regime regime, std::int64_t n, int K, double alpha1 = 0.0);

/* Rescaled view of a trajectory: values are exact integer ratios evaluated
 * lazily at query times. Holds a reference; the trajectory must outlive the
 * view. */
class RescaledView {
 public:
  RescaledView(const Trajectory& traj, const ScalingConstants& c);

  std::size_t rows() const { return traj_->times.size(); }
  /* Row time on the rescaled clock. */
  double time(std::size_t i) const { return traj_->times[i] / c_.tau; }
  double final_time() const { return traj_->final_time / c_.tau; }
  /* Rescaled coordinate k = 0..K+1 of row i. */
  double value(std::size_t i, int k) const { return rescale_state(traj_->states[i], c_, k); }
  /* Piecewise-constant evaluation at rescaled time t in [0, final_time]. */
  std::vector<double> at_time(double t) const;

  const Trajectory& trajectory() const { return *traj_; }
  const ScalingConstants& constants() const { return c_; }

  static double rescale_state(const PopulationState& s, const ScalingConstants& c, int k);
  static std::vector<double> rescale_state(const PopulationState& s, const ScalingConstants& c);

 private:
  const Trajectory* traj_;
  ScalingConstants c_;
};

inline RescaledView rescale(const Trajectory& traj, const ScalingConstants& c) {
  return RescaledView(traj, c);
}

/* Inverts a rescaled state back to integer coordinates. */
PopulationState unrescale_state(const std::vector<double>& A, const ScalingConstants& c);

/* Stage perturbations that realize drift rates gamma in the scaling limit:
 * delta = 0 and epsilon_k = gamma_k / tau. Rejects |gamma_k| >= tau, which
 * would leave the admissible perturbation range. */
std::pair<std::vector<double>, std::vector<double>> perturbations_for_gamma(
    const std::vector<double>& gamma, const ScalingConstants& c);
std::pair<std::vector<double>, std::vector<double>> perturbations_for_gamma(
    const std::vector<double>& gamma, double tau);

}  // namespace kstage
