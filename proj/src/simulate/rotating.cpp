#include <algorithm>
#include <cmath>
#include <string>

#include "squeezesim/errors.hpp"
#include "squeezesim/rng.hpp"
#include "squeezesim/simulate.hpp"

namespace squeezesim::simulate {

namespace {

// One exact Ornstein-Uhlenbeck step for dX = (-lambda X + c) dt + b dW.
struct OuStep {
  double decay;     // exp(-lambda h)
  double drift;     // c (1 - exp(-lambda h)) / lambda
  double noise_sd;  // sqrt(b^2 (1 - exp(-2 lambda h)) / (2 lambda))

  OuStep(double lambda, double c, double b2, double h) {
    decay = std::exp(-lambda * h);
    // (1 - e^{-lambda h}) / lambda, continuous through lambda = 0
    const double lin = lambda != 0.0 ? -std::expm1(-lambda * h) / lambda : h;
    const double quad = lambda != 0.0 ? -std::expm1(-2.0 * lambda * h) / (2.0 * lambda) : h;
    drift = c * lin;
    noise_sd = std::sqrt(std::max(0.0, b2 * quad));
  }

  double operator()(double x, double normal) const { return decay * x + drift + noise_sd * normal; }
};

}  // namespace

std::span<const double> QuadratureTrace::steady_x1() const {
  const std::size_t s = std::min(settle_samples, x1.size());
  return std::span<const double>(x1).subspan(s);
}

std::span<const double> QuadratureTrace::steady_x2() const {
  const std::size_t s = std::min(settle_samples, x2.size());
  return std::span<const double>(x2).subspan(s);
}

ForceNoise quadrature_force_noise(const OscillatorParams& osc, const ThermalBath& bath, double gfb,
                                  const std::optional<QuantumReadout>& readout) {
  const double m = osc.mass();
  const double w = osc.omega_m();
  const double gm = osc.gamma_m();
  ForceNoise n;
  if (!readout) {
    n.s_f1 = n.s_f2 = 4.0 * m * gm * constants::k_B * bath.temperature;
    return n;
  }
  readout->validate();
  const double nbar = bath.nbar(w);
  const double base = 2.0 * constants::hbar * m * w * gm * (2.0 * nbar + 1.0) +
                      4.0 * constants::hbar * m * w * readout->gamma_qba * gm;
  n.s_f1 = n.s_f2 = base;
  if (gfb > 0.0) {
    const double g_meas = readout->g_meas() * gm;
    if (!(g_meas > 0.0)) throw ValidationError("feedback requires g_meas > 0");
    const double g_fb = gfb * gm;
    n.s_f2 += constants::hbar * m * w * g_fb * g_fb / (4.0 * g_meas);
  }
  return n;
}

std::pair<double, double> quadrature_rates(const OscillatorParams& osc, double gs, double gfb,
                                           ParametricPhase phase) {
  const double gm = osc.gamma_m();
  if (phase == ParametricPhase::amplify) return {gm * (1.0 - gs), gm * (1.0 + gs + gfb)};
  return {gm * (1.0 + gs), gm * (1.0 - gs + gfb)};
}

double max_rotating_step(const OscillatorParams& osc, double gs, double gfb, ParametricPhase phase) {
  const auto [g1, g2] = quadrature_rates(osc, gs, gfb, phase);
  const double fastest = std::max({osc.gamma_m(), std::abs(g1), std::abs(g2)});
  return 0.01 / fastest;
}

QuadratureTrace simulate_rotating(const OscillatorParams& osc, const ThermalBath& bath, double gs,
                                  double gfb, const std::optional<QuantumReadout>& readout,
                                  double duration, double dt, std::uint64_t seed,
                                  const RotatingOptions& options) {
  if (!(gs >= 0.0)) throw ValidationError("gs must be >= 0");
  if (!(gfb >= 0.0)) throw ValidationError("gfb must be >= 0");
  if (!(bath.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be > 0");
  if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
  const double dt_max = max_rotating_step(osc, gs, gfb, options.phase);
  if (dt > dt_max * (1.0 + 1e-12)) {
    throw ValidationError("time step " + std::to_string(dt) + " s exceeds the stability limit " +
                          std::to_string(dt_max) + " s");
  }
  const double n_steps_d = std::floor(duration / dt + 1e-9);
  if (n_steps_d > 2e9) throw ValidationError("trace too long (more than 2e9 samples)");
  const auto n = static_cast<std::size_t>(n_steps_d) + 1;

  const double m = osc.mass();
  const double w = osc.omega_m();
  const double gm = osc.gamma_m();
  const auto [g1, g2] = quadrature_rates(osc, gs, gfb, options.phase);
  const double lambda1 = 0.5 * g1;
  const double lambda2 = 0.5 * g2;

  const ForceNoise noise = quadrature_force_noise(osc, bath, gfb, readout);
  const double scale = 1.0 / (4.0 * m * m * w * w);
  const double b1 = noise.s_f1 * scale;
  const double b2 = noise.s_f2 * scale;
  const double c1 = options.f0 / (2.0 * m * w);

  const OuStep step1(lambda1, c1, b1, dt);
  const OuStep step2(lambda2, 0.0, b2, dt);

  QuadratureTrace tr;
  tr.dt = dt;
  tr.seed = seed;
  tr.params = TraceParams{osc, bath, gs, gfb, options.phase, options.f0, readout, duration};
  tr.divergent = !(lambda1 > 0.0) || !(lambda2 > 0.0);

  const double slowest = std::min(lambda1, lambda2);
  double settle = options.settle_time;
  if (settle < 0.0) settle = slowest > 0.0 ? 10.0 / (2.0 * slowest) : 0.0;
  tr.settle_samples = std::min(n, static_cast<std::size_t>(std::ceil(settle / dt)));

  // Blow-up guard in units of the free thermal amplitude (or the drive / initial state).
  const double sigma_ref = std::sqrt(std::max(b1, b2) / gm);
  const double level = std::max({sigma_ref, std::abs(c1) / gm, std::abs(options.x1_initial),
                                  std::abs(options.x2_initial), 1e-300});
  const double limit = options.divergence_sigmas * level;

  CounterRng rng1(seed, streams::force_x1);
  CounterRng rng2(seed, streams::force_x2);

  tr.x1.reserve(n);
  tr.x2.reserve(n);
  double x1 = options.x1_initial;
  double x2 = options.x2_initial;
  tr.x1.push_back(x1);
  tr.x2.push_back(x2);
  for (std::size_t i = 1; i < n; ++i) {
    x1 = step1(x1, rng1.normal());
    x2 = step2(x2, rng2.normal());
    if (!(std::abs(x1) <= limit) || !(std::abs(x2) <= limit)) {
      tr.divergent = true;
      break;
    }
    tr.x1.push_back(x1);
    tr.x2.push_back(x2);
  }
  tr.settle_samples = std::min(tr.settle_samples, tr.x1.size());
  return tr;
}

}  // namespace squeezesim::simulate
