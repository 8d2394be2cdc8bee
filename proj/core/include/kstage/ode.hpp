#pragma once

#include <string>
#include <vector>

#include "kstage/errors.hpp"

namespace kstage {

/* Scalar forcing y(t), given either as identically zero or as a sampled
 * path interpolated piecewise-linearly. */
struct ForcingPath {
  bool is_zero = true;
  std::vector<double> times;   // strictly increasing, starting at 0
  std::vector<double> values;  // same size

  static ForcingPath zero() { return {}; }
  static ForcingPath sampled(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
};

struct OdeGrid {
  double dt = 1e-3;
  double T = 1.0;
};

/* Deterministic flow of the coordinates (x_0, x_2, ..., x_{K+1}) when the
 * stage-1 coordinate is supplied from outside as y (convention x_1 = y):
 *   x_0' = x_{K+1}' = x_K
 *   x_2' = y + (gamma_2 - x_0) x_2
 *   x_k' = x_{k-1} + (gamma_k - x_0) x_k,   3 <= k <= K.
 * Arrays are indexed 0..K: entry 0 is x_0, entry j (1 <= j <= K-1) is
 * x_{j+1}, entry K is x_{K+1}. For K = 1 both derivatives equal y. */
struct OdeSolution {
  int K = 1;
  std::vector<double> gamma;  // size K; only gamma_2..gamma_K enter the flow
  double dt = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // one row of K+1 entries per time
  ForcingPath forcing;

  std::size_t rows() const { return times.size(); }
  /* Value of model coordinate k in {0, 2, ..., K+1} at row i. */
  double coord(std::size_t i, int k) const {
    return values[i][static_cast<std::size_t>(k == 0 ? 0 : k - 1)];
  }
  std::vector<std::string> coordinate_names() const;
};

std::vector<double> ode_rhs(double y, const std::vector<double>& x,
                            const std::vector<double>& gamma);

/* Same computation into reused storage: the integrators' per-step path. */
void ode_rhs_into(double y, const std::vector<double>& x, const std::vector<double>& gamma,
                  std::vector<double>& out);

/* Classical fixed-step RK4; forcing is interpolated onto the half steps and
 * negative excursions are clamped to zero after each step. */
OdeSolution integrate_ode(const std::vector<double>& init, const ForcingPath& forcing,
                          const std::vector<double>& gamma, const OdeGrid& grid);

/* y = 0 solution in closed form:
 *   x_k(t) = (sum_{i=0}^{k-2} x_{k-i}(0) phi_{k,i}(t)) exp(-I_k(t)),
 *   I_k(t) = int_0^t (x_0 - gamma_k),
 *   phi_{k,0} = 1,  phi_{k,i}(t) = int_0^t phi_{k-1,i-1}(u) e^{eta_k u} du,
 *   eta_k = gamma_{k-1} - gamma_k,
 * closed by x_0(t) = x_0(0) + int_0^t x_K. The x_0 self-consistency is
 * solved by fixed-point iteration (start from x_0 held at its initial
 * value; alternate quadrature of x_K with the formula above) to sup-norm
 * 1e-10, at most 200 iterations; quadratures are trapezoid sums on the
 * solution grid. */
OdeSolution closed_form_y0(const std::vector<double>& init, const std::vector<double>& gamma,
                           const OdeGrid& grid);

struct OdePropertyCheck {
  std::string name;
  bool passed = false;
  double margin = 0;  // distance to the failure boundary, positive when passed
};

struct OdePropertyReport {
  std::vector<OdePropertyCheck> checks;
  double x0_terminal = 0;  // lower estimate of x_0(infinity)
  double x0_upper = 0;     // terminal value plus remaining stage mass
  bool all_passed() const;
};

struct OdePropertyTolerances {
  double monotonicity_slack = 1e-9;
  double decay_threshold = 1e-4;
};

/* Diagnostic pass over a solution: monotone x_0; positivity of x_0 and
 * x_2..x_K for t > 0 whenever y(0) > 0 or x_2(0) > 0; the bracketed
 * x_0(infinity) exceeding every gamma_k; terminal decay and integrability
 * of each middle stage. For K = 1 only the monotonicity check applies. */
OdePropertyReport verify_properties(const OdeSolution& sol,
                                    const OdePropertyTolerances& tol = {});

/* Right-continuous inverse c of s -> int_0^s z(u) du for a sampled
 * nonnegative z: c(t) = inf{s : int_0^s z > t}, +infinity once t reaches
 * the total integral. The trapezoid cumulative is inverted exactly on each
 * cell. If z is the speed of a time-changed path, plugging c(t) into the
 * path runs it at unit speed. */
class TimeChange {
 public:
  TimeChange(std::vector<double> times, std::vector<double> values);

  double total_mass() const { return cumulative_.back(); }
  double operator()(double t) const;
  /* Forward map int_0^s z for round trips; constant after the last sample. */
  double cumulative(double s) const;

 private:
  std::vector<double> times_, values_, cumulative_;
};

}  // namespace kstage
