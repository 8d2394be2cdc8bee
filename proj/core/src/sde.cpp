#include "kstage/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "kstage/ode.hpp"
#include "kstage/trajectory.hpp"

namespace kstage {

void SdeSpec::validate() const {
  require(K >= 1, "SdeSpec: K must be >= 1");
  require(gamma.size() == static_cast<std::size_t>(K), "SdeSpec: gamma must have K entries");
  for (double g : gamma) require(std::isfinite(g), "SdeSpec: gamma must be finite");
  if (variant == SdeVariant::feller) {
    require(K == 1, "SdeSpec: the feller variant is one-dimensional (K = 1)");
  }
}

namespace {

void drift_into(const std::vector<double>& a, const SdeSpec& spec, std::vector<double>& b) {
  const int K = spec.K;
  const double depletion = spec.variant == SdeVariant::intermediate ? a[0] : 0.0;
  b.resize(a.size());
  b[0] = a[static_cast<std::size_t>(K)];
  b[static_cast<std::size_t>(K + 1)] = a[static_cast<std::size_t>(K)];
  b[1] = (spec.gamma[0] - depletion) * a[1];
  for (int k = 2; k <= K; ++k) {
    b[static_cast<std::size_t>(k)] =
        a[static_cast<std::size_t>(k - 1)] +
        (spec.gamma[static_cast<std::size_t>(k - 1)] - depletion) * a[static_cast<std::size_t>(k)];
  }
}

}  // namespace

std::vector<double> drift(const std::vector<double>& a, const SdeSpec& spec) {
  spec.validate();
  require(a.size() == static_cast<std::size_t>(spec.K) + 2,
          "drift: state must have K+2 coordinates");
  std::vector<double> b;
  drift_into(a, spec, b);
  return b;
}

namespace {

struct EmState {
  std::vector<double> a;
  std::vector<double> b;  // drift scratch
  bool absorbed = false;
  double t0 = kInfinity;

  /* One Euler-Maruyama step; draws one normal iff coordinate 1 is alive. */
  void step(const SdeSpec& spec, double dt, double t_next, RngStream& rng) {
    drift_into(a, spec, b);
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (j == 1) continue;
      a[j] += b[j] * dt;
      if (a[j] < 0.0) a[j] = 0.0;
    }
    if (!absorbed) {
      const double diff = std::sqrt(2.0 * std::max(a[1], 0.0) * dt);
      a[1] += b[1] * dt + diff * rng.normal();
      if (a[1] <= 0.0) {
        a[1] = 0.0;
        absorbed = true;
        t0 = t_next;
      }
    }
    for (double v : a) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("integrate_sde: state escaped to a non-finite value");
      }
    }
  }
};

}  // namespace

DiffusionPath integrate_sde(const SdeSpec& spec, const std::vector<double>& init,
                            const SdeConfig& config, RngSeed seed) {
  spec.validate();
  require(init.size() == static_cast<std::size_t>(spec.K) + 2,
          "integrate_sde: init must have K+2 coordinates");
  for (double v : init) require(std::isfinite(v) && v >= 0, "integrate_sde: init must be >= 0");
  require(config.dt > 0 && std::isfinite(config.dt), "integrate_sde: dt must be positive");
  require(config.T > 0 && std::isfinite(config.T), "integrate_sde: horizon must be positive");

  const std::size_t steps = static_cast<std::size_t>(std::llround(std::ceil(
      config.T / config.dt - 1e-9)));

  DiffusionPath path;
  path.spec = spec;
  path.dt = config.dt;
  path.seed = seed;
  path.times.reserve(steps + 1);
  path.values.reserve(steps + 1);

  RngStream rng(seed);
  EmState s;
  s.a = init;
  if (s.a[1] <= 0.0) {
    s.absorbed = true;
    s.t0 = 0.0;
  }
  path.times.push_back(0.0);
  path.values.push_back(s.a);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t_next = std::min(static_cast<double>(i) * config.dt, config.T);
    const double dt = t_next - path.times.back();
    s.step(spec, dt, t_next, rng);
    path.times.push_back(t_next);
    path.values.push_back(s.a);
  }
  path.t0_coordinate1 = s.t0;
  return path;
}

TerminalOutbreak terminal_outbreak(const SdeSpec& spec, const std::vector<double>& init,
                                   const TerminalConfig& config, RngSeed seed) {
  spec.validate();
  require(init.size() == static_cast<std::size_t>(spec.K) + 2,
          "terminal_outbreak: init must have K+2 coordinates");
  for (double v : init) {
    require(std::isfinite(v) && v >= 0, "terminal_outbreak: init must be >= 0");
  }
  const int K = spec.K;

  TerminalOutbreak out;
  out.seed = seed;
  out.dt = config.dt;

  RngStream rng(seed);
  EmState s;
  s.a = init;
  if (s.a[1] <= 0.0) {
    s.absorbed = true;
    s.t0 = 0.0;
  }
  double t = 0.0;
  std::size_t i = 0;
  while (!s.absorbed) {
    ++i;
    const double t_next = static_cast<double>(i) * config.dt;
    s.step(spec, t_next - t, t_next, rng);
    t = t_next;
    if (t > config.sde_t_max && !s.absorbed) {
      throw convergence_error("terminal_outbreak: coordinate 1 did not absorb before sde_t_max",
                              s.a[static_cast<std::size_t>(K + 1)], s.a[1]);
    }
  }
  out.t0_a1 = s.t0;

  if (K == 1) {
    out.value = s.a[2];
    return out;
  }

  // deterministic tail: (x_0, x_2..x_{K+1}) with zero forcing
  std::vector<double> x(static_cast<std::size_t>(K) + 1);
  x[0] = s.a[0];
  for (int k = 2; k <= K + 1; ++k) x[static_cast<std::size_t>(k - 1)] = s.a[static_cast<std::size_t>(k)];

  auto tail_mass = [K](const std::vector<double>& v) {
    double m = 0;
    for (int k = 2; k <= K; ++k) m += v[static_cast<std::size_t>(k - 1)];
    return m;
  };

  const double h = config.ode_dt;
  std::vector<double> tmp(x.size());
  std::vector<double> k1, k2, k3, k4;
  double t_ode = 0.0;
  while (tail_mass(x) >= config.eps_tail) {
    if (t_ode > config.ode_t_max) {
      const double tail = tail_mass(x);
      throw convergence_error("terminal_outbreak: stage mass did not decay below eps_tail",
                              x[static_cast<std::size_t>(K)] + tail, tail);
    }
    ode_rhs_into(0.0, x, spec.gamma, k1);
    for (std::size_t j = 0; j < x.size(); ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
    ode_rhs_into(0.0, tmp, spec.gamma, k2);
    for (std::size_t j = 0; j < x.size(); ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
    ode_rhs_into(0.0, tmp, spec.gamma, k3);
    for (std::size_t j = 0; j < x.size(); ++j) tmp[j] = x[j] + h * k3[j];
    ode_rhs_into(0.0, tmp, spec.gamma, k4);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (x[j] < 0.0) x[j] = 0.0;
    }
    t_ode += h;
  }
  out.tail_added = tail_mass(x);
  out.value = x[static_cast<std::size_t>(K)] + out.tail_added;
  out.ode_time = t_ode;
  return out;
}

}  // namespace kstage
