#include "kstage/compensator.hpp"

namespace kstage {

namespace {

struct Rates {
  std::vector<double> v;         // dV_k/dt on the current interval
  std::vector<double> qv_extra;  // 2 (tau/alpha_k)(1+delta_k) A_k
};

struct Integrator {
  const Trajectory& traj;
  const ScalingConstants& c;
  std::vector<double> deltaX, epsX;  // indices 0..K+1 with boundary conventions

  explicit Integrator(const Trajectory& t, const ScalingConstants& cc) : traj(t), c(cc) {
    require(t.event_resolved, "compensators: require a full event record");
    require(t.params.n == c.n && t.params.K == c.K,
            "compensators: trajectory and constants must share n and K");
    const int K = c.K;
    deltaX.assign(static_cast<std::size_t>(K) + 2, -1.0);
    epsX.assign(static_cast<std::size_t>(K) + 2, -1.0);
    for (int k = 1; k <= K; ++k) {
      deltaX[static_cast<std::size_t>(k)] = t.params.delta[static_cast<std::size_t>(k - 1)];
      epsX[static_cast<std::size_t>(k)] = t.params.epsilon[static_cast<std::size_t>(k - 1)];
    }
  }

  Rates rates(const PopulationState& s) const {
    const int K = c.K;
    const double tau = c.tau;
    const double nd = static_cast<double>(c.n);
    std::vector<double> A = RescaledView::rescale_state(s, c);

    Rates r;
    r.v.assign(static_cast<std::size_t>(K) + 2, 0.0);
    r.qv_extra.assign(static_cast<std::size_t>(K) + 2, 0.0);

    const double depletion = 1.0 - c.alpha[0] * A[0] / nd;  // = a_0 / n
    double v0 = 0.0;
    for (int k = 1; k <= K; ++k) {
      v0 += (1.0 + epsX[static_cast<std::size_t>(k)]) * c.alpha[static_cast<std::size_t>(k)] *
            depletion * A[static_cast<std::size_t>(k)];
    }
    r.v[0] = (tau / c.alpha[0]) * v0;

    for (int k = 1; k <= K + 1; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      r.v[ku] = (1.0 + deltaX[ku - 1]) * A[ku - 1] + tau * (epsX[ku] - deltaX[ku]) * A[ku] -
                (tau * c.alpha[0] / nd) * (1.0 + epsX[ku]) * A[0] * A[ku];
    }
    for (int k = 0; k <= K + 1; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      r.qv_extra[ku] = 2.0 * (tau / c.alpha[ku]) * (1.0 + deltaX[ku]) * A[ku];
    }
    return r;
  }
};

}  // namespace

CompensatorPaths compensator_paths(const Trajectory& traj, const ScalingConstants& c) {
  Integrator integ(traj, c);
  const int K = c.K;
  const std::size_t rows = traj.times.size();

  CompensatorPaths out;
  out.constants = c;
  out.times.resize(rows);
  out.drift.assign(static_cast<std::size_t>(K) + 2, std::vector<double>(rows, 0.0));
  out.quadratic_variation = out.drift;
  out.martingale = out.drift;

  std::vector<double> A0 = RescaledView::rescale_state(traj.states[0], c);
  std::vector<double> V(static_cast<std::size_t>(K) + 2, 0.0);
  std::vector<double> QV(static_cast<std::size_t>(K) + 2, 0.0);

  out.times[0] = traj.times[0] / c.tau;
  for (std::size_t i = 1; i < rows; ++i) {
    const double ds = (traj.times[i] - traj.times[i - 1]) / c.tau;
    Rates r = integ.rates(traj.states[i - 1]);
    for (int k = 0; k <= K + 1; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      V[ku] += r.v[ku] * ds;
      QV[ku] += (r.v[ku] / c.alpha[ku] + r.qv_extra[ku]) * ds;
    }
    out.times[i] = traj.times[i] / c.tau;
    std::vector<double> A = RescaledView::rescale_state(traj.states[i], c);
    for (int k = 0; k <= K + 1; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      out.drift[ku][i] = V[ku];
      out.quadratic_variation[ku][i] = QV[ku];
      out.martingale[ku][i] = A[ku] - A0[ku] - V[ku];
    }
  }
  return out;
}

CompensatorSample compensators_at(const Trajectory& traj, const ScalingConstants& c, double t) {
  Integrator integ(traj, c);
  require(t >= 0.0 && t <= traj.final_time / c.tau + 1e-12,
          "compensators_at: t outside the simulated range");
  const int K = c.K;

  std::vector<double> A0 = RescaledView::rescale_state(traj.states[0], c);
  std::vector<double> V(static_cast<std::size_t>(K) + 2, 0.0);
  std::vector<double> QV(static_cast<std::size_t>(K) + 2, 0.0);

  std::size_t last = 0;
  for (std::size_t i = 1; i < traj.times.size() && traj.times[i] / c.tau <= t; ++i) {
    const double ds = (traj.times[i] - traj.times[i - 1]) / c.tau;
    Rates r = integ.rates(traj.states[i - 1]);
    for (int k = 0; k <= K + 1; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      V[ku] += r.v[ku] * ds;
      QV[ku] += (r.v[ku] / c.alpha[ku] + r.qv_extra[ku]) * ds;
    }
    last = i;
  }
  const double s_last = traj.times[last] / c.tau;
  if (t > s_last) {
    // the state persists on [s_last, t]
    Rates r = integ.rates(traj.states[last]);
    const double ds = t - s_last;
    for (int k = 0; k <= K + 1; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      V[ku] += r.v[ku] * ds;
      QV[ku] += (r.v[ku] / c.alpha[ku] + r.qv_extra[ku]) * ds;
    }
  }

  CompensatorSample out;
  out.drift = V;
  out.quadratic_variation = QV;
  out.martingale.resize(V.size());
  std::vector<double> At = RescaledView::rescale_state(traj.states[last], c);
  for (std::size_t k = 0; k < V.size(); ++k) out.martingale[k] = At[k] - A0[k] - V[k];
  return out;
}

}  // namespace kstage
