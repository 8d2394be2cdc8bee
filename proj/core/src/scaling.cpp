#include "kstage/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace kstage {

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::small: return "small";
    case Regime::intermediate: return "intermediate";
    case Regime::large: return "large";
  }
  return "?";
}

Regime regime_from_name(const std::string& name) {
  if (name == "small") return Regime::small;
  if (name == "intermediate") return Regime::intermediate;
  if (name == "large") return Regime::large;
  throw contract_error("unknown regime '" + name + "' (small|intermediate|large)");
}

void ScalingConstants::validate() const {
  require(n >= 1 && K >= 1, "ScalingConstants: need n >= 1, K >= 1");
  require(alpha.size() == static_cast<std::size_t>(K) + 2,
          "ScalingConstants: alpha must have K+2 entries");
  require(tau > 0, "ScalingConstants: tau must be positive");
  for (double a : alpha) require(a > 0, "ScalingConstants: alpha entries must be positive");
  const double tol = 1e-9;
  auto close = [tol](double x, double y) { return std::abs(x - y) <= tol * std::max(x, y); };
  require(close(alpha.front(), alpha.back()), "ScalingConstants: alpha_0 must equal alpha_{K+1}");
  for (int k = 1; k <= K; ++k) {
    require(close(alpha[static_cast<std::size_t>(k + 1)], tau * alpha[static_cast<std::size_t>(k)]),
            "ScalingConstants: alpha_{k+1} must equal tau * alpha_k");
  }
}

ScalingConstants scaling_constants(Regime regime, std::int64_t n, int K, double alpha1) {
  require(n >= 1, "scaling_constants: n must be >= 1");
  require(K >= 1, "scaling_constants: K must be >= 1");
  const double nd = static_cast<double>(n);
  const double knee = std::pow(nd, 1.0 / (K + 2));  // boundary between the regimes

  ScalingConstants c;
  c.regime = regime;
  c.n = n;
  c.K = K;
  c.alpha.assign(static_cast<std::size_t>(K) + 2, 0.0);

  auto warn_near = [&](double value, double lo, double hi) {
    if (value <= 4.0 * lo || value >= hi / 4.0) {
      c.boundary_warning = true;
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "alpha1=%.6g is within a factor 4 of a regime boundary (%.6g, %.6g)", value,
                    lo, hi);
      c.warning = buf;
    }
  };

  switch (regime) {
    case Regime::intermediate: {
      c.tau = knee;
      for (int k = 1; k <= K + 1; ++k) {
        c.alpha[static_cast<std::size_t>(k)] = std::pow(knee, k);
      }
      c.alpha[0] = c.alpha[static_cast<std::size_t>(K + 1)];
      break;
    }
    case Regime::small: {
      require(alpha1 > 1.0 && alpha1 < knee,
              "scaling_constants: small regime needs 1 < alpha1 < n^{1/(K+2)}");
      c.tau = alpha1;
      for (int k = 1; k <= K + 1; ++k) {
        c.alpha[static_cast<std::size_t>(k)] = std::pow(alpha1, k);
      }
      c.alpha[0] = c.alpha[static_cast<std::size_t>(K + 1)];
      warn_near(alpha1, 1.0, knee);
      break;
    }
    case Regime::large: {
      require(alpha1 > knee && alpha1 < nd,
              "scaling_constants: large regime needs n^{1/(K+2)} < alpha1 < n");
      c.tau = std::pow(nd / alpha1, 1.0 / (K + 1));
      c.alpha[0] = nd / c.tau;
      c.alpha[1] = alpha1;
      for (int k = 2; k <= K + 1; ++k) {
        c.alpha[static_cast<std::size_t>(k)] = std::pow(c.tau, k - 1) * alpha1;
      }
      warn_near(alpha1, knee, nd);
      break;
    }
  }
  c.validate();
  return c;
}

RescaledView::RescaledView(const Trajectory& traj, const ScalingConstants& c)
    : traj_(&traj), c_(c) {
  c_.validate();
  require(traj.params.n == c.n && traj.params.K == c.K,
          "rescale: trajectory and constants must share n and K");
}

double RescaledView::rescale_state(const PopulationState& s, const ScalingConstants& c, int k) {
  if (k == 0) {
    return static_cast<double>(c.n - s.a[0]) / c.alpha[0];
  }
  return static_cast<double>(s.a[static_cast<std::size_t>(k)]) /
         c.alpha[static_cast<std::size_t>(k)];
}

std::vector<double> RescaledView::rescale_state(const PopulationState& s,
                                                const ScalingConstants& c) {
  std::vector<double> out(static_cast<std::size_t>(c.K) + 2);
  for (int k = 0; k <= c.K + 1; ++k) out[static_cast<std::size_t>(k)] = rescale_state(s, c, k);
  return out;
}

std::vector<double> RescaledView::at_time(double t) const {
  require(t >= 0.0, "RescaledView::at_time: t must be nonnegative");
  const double raw = t * c_.tau;
  auto it = std::upper_bound(traj_->times.begin(), traj_->times.end(), raw);
  require(it != traj_->times.begin(), "RescaledView::at_time: before the first sample");
  const std::size_t i = static_cast<std::size_t>(it - traj_->times.begin()) - 1;
  return rescale_state(traj_->states[i], c_);
}

PopulationState unrescale_state(const std::vector<double>& A, const ScalingConstants& c) {
  require(A.size() == static_cast<std::size_t>(c.K) + 2, "unrescale_state: dimension mismatch");
  PopulationState s;
  s.a.resize(A.size());
  s.a[0] = c.n - static_cast<std::int64_t>(std::llround(A[0] * c.alpha[0]));
  for (int k = 1; k <= c.K + 1; ++k) {
    s.a[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(
        std::llround(A[static_cast<std::size_t>(k)] * c.alpha[static_cast<std::size_t>(k)]));
  }
  return s;
}

std::pair<std::vector<double>, std::vector<double>> perturbations_for_gamma(
    const std::vector<double>& gamma, double tau) {
  require(tau > 0, "perturbations_for_gamma: tau must be positive");
  std::vector<double> delta(gamma.size(), 0.0);
  std::vector<double> epsilon(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    require(std::abs(gamma[i]) < tau,
            "perturbations_for_gamma: |gamma_k| >= tau leaves the admissible range");
    epsilon[i] = gamma[i] / tau;
  }
  return {std::move(delta), std::move(epsilon)};
}

std::pair<std::vector<double>, std::vector<double>> perturbations_for_gamma(
    const std::vector<double>& gamma, const ScalingConstants& c) {
  require(gamma.size() == static_cast<std::size_t>(c.K),
          "perturbations_for_gamma: gamma must have K entries");
  return perturbations_for_gamma(gamma, c.tau);
}

}  // namespace kstage
