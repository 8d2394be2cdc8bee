#include "kstage/ode.hpp"

#include <algorithm>
#include <cmath>

#include "kstage/trajectory.hpp"

namespace kstage {

namespace {

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

std::vector<double> make_grid(const OdeGrid& g) {
  require(g.dt > 0 && std::isfinite(g.dt), "ode: dt must be positive");
  require(g.T > 0 && std::isfinite(g.T), "ode: horizon must be positive");
  std::vector<double> times;
  times.push_back(0.0);
  for (std::size_t i = 1;; ++i) {
    double t = static_cast<double>(i) * g.dt;
    if (t >= g.T - 1e-12 * g.T) break;
    times.push_back(t);
  }
  times.push_back(g.T);  // final step may be shorter than dt
  return times;
}

/* Trapezoid cumulative of f over possibly uneven grid times. */
std::vector<double> trapezoid_cumulative(const std::vector<double>& times,
                                         const std::vector<double>& f) {
  std::vector<double> cum(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (f[i] + f[i - 1]) * (times[i] - times[i - 1]);
  }
  return cum;
}

}  // namespace

ForcingPath ForcingPath::sampled(std::vector<double> times, std::vector<double> values) {
  require(times.size() == values.size() && times.size() >= 2,
          "ForcingPath: need matching times/values with at least two samples");
  require(times.front() == 0.0, "ForcingPath: samples must start at t=0");
  require(strictly_increasing(times), "ForcingPath: times must be strictly increasing");
  ForcingPath f;
  f.is_zero = false;
  f.times = std::move(times);
  f.values = std::move(values);
  return f;
}

double ForcingPath::operator()(double t) const {
  if (is_zero) return 0.0;
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t j = static_cast<std::size_t>(it - times.begin());
  double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
  return values[j - 1] + w * (values[j] - values[j - 1]);
}

std::vector<std::string> OdeSolution::coordinate_names() const {
  std::vector<std::string> names;
  names.push_back("x_0");
  for (int k = 2; k <= K + 1; ++k) names.push_back("x_" + std::to_string(k));
  return names;
}

void ode_rhs_into(double y, const std::vector<double>& x, const std::vector<double>& gamma,
                  std::vector<double>& out) {
  const int K = static_cast<int>(gamma.size());
  out.resize(x.size());
  if (K == 1) {
    out[0] = y;
    out[1] = y;
    return;
  }
  const double xK = x[static_cast<std::size_t>(K - 1)];
  out[0] = xK;
  out[static_cast<std::size_t>(K)] = xK;
  out[1] = y + (gamma[1] - x[0]) * x[1];
  for (int j = 2; j <= K - 1; ++j) {
    out[static_cast<std::size_t>(j)] =
        x[static_cast<std::size_t>(j - 1)] +
        (gamma[static_cast<std::size_t>(j)] - x[0]) * x[static_cast<std::size_t>(j)];
  }
}

std::vector<double> ode_rhs(double y, const std::vector<double>& x,
                            const std::vector<double>& gamma) {
  const int K = static_cast<int>(gamma.size());
  require(K >= 1, "ode_rhs: gamma must have K >= 1 entries");
  require(x.size() == static_cast<std::size_t>(K) + 1,
          "ode_rhs: state must have K+1 entries (x_0, x_2..x_{K+1})");
  std::vector<double> out;
  ode_rhs_into(y, x, gamma, out);
  return out;
}

OdeSolution integrate_ode(const std::vector<double>& init, const ForcingPath& forcing,
                          const std::vector<double>& gamma, const OdeGrid& grid) {
  const int K = static_cast<int>(gamma.size());
  require(init.size() == static_cast<std::size_t>(K) + 1,
          "integrate_ode: init must have K+1 entries");
  for (double v : init) require(std::isfinite(v) && v >= 0, "integrate_ode: init must be >= 0");
  if (!forcing.is_zero) {
    require(forcing.times.back() >= grid.T - 1e-12,
            "integrate_ode: forcing samples do not cover the horizon");
  }

  OdeSolution sol;
  sol.K = K;
  sol.gamma = gamma;
  sol.dt = grid.dt;
  sol.forcing = forcing;
  sol.times = make_grid(grid);
  sol.values.reserve(sol.times.size());
  sol.values.push_back(init);

  std::vector<double> x = init;
  std::vector<double> tmp(x.size());
  std::vector<double> k1, k2, k3, k4;
  for (std::size_t i = 1; i < sol.times.size(); ++i) {
    const double t = sol.times[i - 1];
    const double h = sol.times[i] - sol.times[i - 1];
    const double y0 = forcing(t);
    const double ym = forcing(t + 0.5 * h);
    const double y1 = forcing(t + h);

    ode_rhs_into(y0, x, gamma, k1);
    for (std::size_t j = 0; j < x.size(); ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
    ode_rhs_into(ym, tmp, gamma, k2);
    for (std::size_t j = 0; j < x.size(); ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
    ode_rhs_into(ym, tmp, gamma, k3);
    for (std::size_t j = 0; j < x.size(); ++j) tmp[j] = x[j] + h * k3[j];
    ode_rhs_into(y1, tmp, gamma, k4);

    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (x[j] < 0.0) x[j] = 0.0;  // clamp negative excursions
    }
    sol.values.push_back(x);
  }
  return sol;
}

OdeSolution closed_form_y0(const std::vector<double>& init, const std::vector<double>& gamma,
                           const OdeGrid& grid) {
  const int K = static_cast<int>(gamma.size());
  require(init.size() == static_cast<std::size_t>(K) + 1,
          "closed_form_y0: init must have K+1 entries");
  for (double v : init) require(std::isfinite(v) && v >= 0, "closed_form_y0: init must be >= 0");

  OdeSolution sol;
  sol.K = K;
  sol.gamma = gamma;
  sol.dt = grid.dt;
  sol.forcing = ForcingPath::zero();
  sol.times = make_grid(grid);
  const std::size_t M = sol.times.size();

  if (K == 1) {
    // x_0' = x_2' = x_1 = 0: both coordinates are constant
    sol.values.assign(M, init);
    return sol;
  }

  // phi[k][i], k = 2..K, i = 0..k-2; independent of x_0, computed once
  std::vector<std::vector<std::vector<double>>> phi(static_cast<std::size_t>(K) + 1);
  for (int k = 2; k <= K; ++k) {
    phi[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(k - 1));
    phi[static_cast<std::size_t>(k)][0].assign(M, 1.0);
    for (int i = 1; i <= k - 2; ++i) {
      const double eta = gamma[static_cast<std::size_t>(k - 2)] -
                         gamma[static_cast<std::size_t>(k - 1)];  // gamma_{k-1} - gamma_k
      std::vector<double> integrand(M);
      for (std::size_t m = 0; m < M; ++m) {
        integrand[m] = phi[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i - 1)][m] *
                       std::exp(eta * sol.times[m]);
      }
      phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
          trapezoid_cumulative(sol.times, integrand);
    }
  }

  std::vector<double> x0(M, init[0]);
  std::vector<std::vector<double>> xk(static_cast<std::size_t>(K) + 1);  // paper index 2..K
  double residual = 0;
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> cum_x0 = trapezoid_cumulative(sol.times, x0);
    for (int k = 2; k <= K; ++k) {
      std::vector<double>& xs = xk[static_cast<std::size_t>(k)];
      xs.assign(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        double sum = 0.0;
        for (int i = 0; i <= k - 2; ++i) {
          sum += init[static_cast<std::size_t>(k - i - 1)] *
                 phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][m];
        }
        const double Ik = cum_x0[m] - gamma[static_cast<std::size_t>(k - 1)] * sol.times[m];
        xs[m] = sum * std::exp(-Ik);
      }
    }
    std::vector<double> cum_xK = trapezoid_cumulative(sol.times, xk[static_cast<std::size_t>(K)]);
    residual = 0;
    for (std::size_t m = 0; m < M; ++m) {
      const double next = init[0] + cum_xK[m];
      residual = std::max(residual, std::abs(next - x0[m]));
      x0[m] = next;
    }
    if (residual < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw convergence_error("closed_form_y0: x_0 fixed point did not reach 1e-10 in 200 iterations",
                            x0.back(), residual);
  }

  // one more consistency pass with the converged x_0
  std::vector<double> cum_x0 = trapezoid_cumulative(sol.times, x0);
  for (int k = 2; k <= K; ++k) {
    std::vector<double>& xs = xk[static_cast<std::size_t>(k)];
    for (std::size_t m = 0; m < M; ++m) {
      double sum = 0.0;
      for (int i = 0; i <= k - 2; ++i) {
        sum += init[static_cast<std::size_t>(k - i - 1)] *
               phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][m];
      }
      const double Ik = cum_x0[m] - gamma[static_cast<std::size_t>(k - 1)] * sol.times[m];
      xs[m] = sum * std::exp(-Ik);
    }
  }
  std::vector<double> cum_xK = trapezoid_cumulative(sol.times, xk[static_cast<std::size_t>(K)]);

  sol.values.assign(M, std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0));
  for (std::size_t m = 0; m < M; ++m) {
    sol.values[m][0] = init[0] + cum_xK[m];
    for (int k = 2; k <= K; ++k) {
      sol.values[m][static_cast<std::size_t>(k - 1)] = xk[static_cast<std::size_t>(k)][m];
    }
    sol.values[m][static_cast<std::size_t>(K)] = init[static_cast<std::size_t>(K)] + cum_xK[m];
  }
  return sol;
}

bool OdePropertyReport::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

OdePropertyReport verify_properties(const OdeSolution& sol, const OdePropertyTolerances& tol) {
  require(!sol.values.empty(), "verify_properties: empty solution");
  const int K = sol.K;
  const std::size_t M = sol.rows();
  OdePropertyReport rep;

  double min_increment = kstage::kInfinity;
  for (std::size_t m = 1; m < M; ++m) {
    min_increment = std::min(min_increment, sol.values[m][0] - sol.values[m - 1][0]);
  }
  if (M == 1) min_increment = 0;
  rep.checks.push_back({"x0_monotone", min_increment >= -tol.monotonicity_slack, min_increment});

  rep.x0_terminal = sol.values.back()[0];
  double tail_mass = 0;
  for (int k = 2; k <= K; ++k) tail_mass += sol.values.back()[static_cast<std::size_t>(k - 1)];
  rep.x0_upper = rep.x0_terminal + tail_mass;

  if (K >= 2) {
    const bool seeded = sol.forcing(0.0) > 0.0 || sol.values.front()[1] > 0.0;
    if (seeded) {
      double min_val = kstage::kInfinity;
      for (std::size_t m = 1; m < M; ++m) {
        min_val = std::min(min_val, sol.values[m][0]);
        for (int k = 2; k <= K; ++k) {
          min_val = std::min(min_val, sol.values[m][static_cast<std::size_t>(k - 1)]);
        }
      }
      rep.checks.push_back({"positivity", min_val > 0.0, min_val});
    }

    double min_gap = kstage::kInfinity;
    for (int k = 2; k <= K; ++k) {
      min_gap = std::min(min_gap, rep.x0_upper - sol.gamma[static_cast<std::size_t>(k - 1)]);
    }
    rep.checks.push_back({"x0_infinity_dominates_gamma", min_gap > 0.0, min_gap});

    double worst_terminal = 0;
    bool integrable = true;
    for (int k = 2; k <= K; ++k) {
      std::vector<double> col(M);
      for (std::size_t m = 0; m < M; ++m) col[m] = sol.values[m][static_cast<std::size_t>(k - 1)];
      worst_terminal = std::max(worst_terminal, col.back());
      double integral = 0;
      for (std::size_t m = 1; m < M; ++m) {
        integral += 0.5 * (col[m] + col[m - 1]) * (sol.times[m] - sol.times[m - 1]);
      }
      integrable = integrable && std::isfinite(integral);
    }
    rep.checks.push_back(
        {"stage_decay", worst_terminal < tol.decay_threshold, tol.decay_threshold - worst_terminal});
    rep.checks.push_back({"integrable_stages", integrable, 0.0});
  }
  return rep;
}

TimeChange::TimeChange(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  require(times_.size() == values_.size() && times_.size() >= 2,
          "TimeChange: need matching times/values with at least two samples");
  require(times_.front() == 0.0, "TimeChange: samples must start at t=0");
  require(strictly_increasing(times_), "TimeChange: times must be strictly increasing");
  for (double v : values_) {
    require(std::isfinite(v) && v >= 0.0, "TimeChange: z must be nonnegative");
  }
  cumulative_ = trapezoid_cumulative(times_, values_);
}

double TimeChange::operator()(double t) const {
  require(t >= 0.0, "TimeChange: t must be nonnegative");
  if (t >= cumulative_.back()) return kstage::kInfinity;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - cumulative_.begin());
  // cell (j-1, j) has cumulative_[j-1] <= t < cumulative_[j], so z is not
  // identically zero on it; flat cells are skipped, which makes the inverse
  // right-continuous
  const double delta = t - cumulative_[j - 1];
  const double h = times_[j] - times_[j - 1];
  const double z0 = values_[j - 1];
  const double slope = (values_[j] - z0) / h;
  if (delta == 0.0) return times_[j - 1];  // includes z0 = 0 with rising z: inf is the cell start
  const double disc = z0 * z0 + 2.0 * slope * delta;
  const double s = 2.0 * delta / (z0 + std::sqrt(std::max(disc, 0.0)));
  return times_[j - 1] + std::min(s, h);
}

double TimeChange::cumulative(double s) const {
  require(s >= 0.0, "TimeChange: s must be nonnegative");
  if (s >= times_.back()) return cumulative_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), s);
  const std::size_t j = static_cast<std::size_t>(it - times_.begin());
  const double ds = s - times_[j - 1];
  const double h = times_[j] - times_[j - 1];
  const double z0 = values_[j - 1];
  const double slope = (values_[j] - z0) / h;
  return cumulative_[j - 1] + z0 * ds + 0.5 * slope * ds * ds;
}

}  // namespace kstage
