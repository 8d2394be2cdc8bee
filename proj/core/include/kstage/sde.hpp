#pragma once

#include <vector>

#include "kstage/rng.hpp"
#include "kstage/errors.hpp"

namespace kstage {

/* Drift families for the limiting dynamics on (A_0, ..., A_{K+1}).
 *   intermediate: b_0 = b_{K+1} = A_K, b_1 = (gamma_1 - A_0) A_1,
 *                 b_k = A_{k-1} + (gamma_k - A_0) A_k          (2 <= k <= K)
 *   small:        the same without the A_0 depletion terms
 *   feller:       K = 1 view of `small`; coordinate 1 is then the branching
 *                 diffusion dZ = gamma_1 Z dt + sqrt(2Z) dB on its own
 * Only coordinate 1 carries noise, with diffusion sqrt(2 A_1). */
enum class SdeVariant { intermediate, small, feller };

struct SdeSpec {
  int K = 1;
  std::vector<double> gamma;  // size K
  SdeVariant variant = SdeVariant::intermediate;

  void validate() const;
};

std::vector<double> drift(const std::vector<double>& a, const SdeSpec& spec);

struct SdeConfig {
  double dt = 1e-3;
  double T = 1.0;
};

struct DiffusionPath {
  SdeSpec spec;
  double dt = 0;
  RngSeed seed;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // rows of K+2
  /* Grid time at which coordinate 1 was absorbed at 0 (+inf if it stayed
   * positive through the horizon). */
  double t0_coordinate1 = 0;
};

/* Euler-Maruyama with full truncation: one Gaussian increment per step on
 * coordinate 1 while it is alive, drift-only updates elsewhere, every
 * coordinate clamped at 0, and 0 absorbing for coordinate 1. Runs with the
 * same seed and grid consume identical noise, which makes coupled
 * comparisons exact. Non-finite values abort the run. */
DiffusionPath integrate_sde(const SdeSpec& spec, const std::vector<double>& init,
                            const SdeConfig& config, RngSeed seed);

struct TerminalConfig {
  double dt = 1e-3;        // diffusion step
  double sde_t_max = 1e3;  // abort if coordinate 1 has not absorbed by then
  double ode_dt = 1e-2;    // deterministic tail step
  double ode_t_max = 500.0;
  double eps_tail = 1e-8;  // stop once sum of stages 2..K falls below this
};

struct TerminalOutbreak {
  double value = 0;       // limiting value of A_{K+1}
  double t0_a1 = 0;       // grid-detected absorption time of coordinate 1
  double tail_added = 0;  // residual stage mass folded into the value
  double ode_time = 0;    // length of the deterministic phase
  RngSeed seed;
  double dt = 0;
};

/* Simulates until coordinate 1 absorbs, then freezes the noise: for K = 1
 * the value at that moment is final; for K >= 2 the remaining coordinates
 * flow deterministically (zero forcing) until the stage mass drops below
 * eps_tail, which is then added to the result. Throws convergence_error
 * (carrying the partial value) if either phase exhausts its horizon. */
TerminalOutbreak terminal_outbreak(const SdeSpec& spec, const std::vector<double>& init,
                                   const TerminalConfig& config, RngSeed seed);

}  // namespace kstage
