#include <algorithm>
#include <cmath>
#include <string>

#include "integrator.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/rng.hpp"
#include "squeezesim/simulate.hpp"

namespace squeezesim::simulate {

double parametric_phase_radians(ParametricPhase phase) {
  return phase == ParametricPhase::amplify ? constants::pi : 0.0;
}

PositionTrace simulate_position(const OscillatorParams& osc, const ThermalBath& bath,
                                const DriveConfig& drive, double kp, double omega_p,
                                double duration, double dt, std::uint64_t seed,
                                const PositionOptions& options) {
  if (!(kp >= 0.0) || !std::isfinite(kp)) throw ValidationError("kp must be >= 0");
  if (!(omega_p > 0.0)) throw ValidationError("omega_p must be > 0");
  if (!(bath.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (!(options.gfb >= 0.0)) throw ValidationError("gfb must be >= 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be > 0");
  if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
  const double w_ref = 0.5 * omega_p;
  const double w_fast = std::max(osc.omega_m(), w_ref);
  const double samples_per_period = constants::two_pi / (w_fast * dt);
  if (samples_per_period < 16.0 * (1.0 - 1e-12)) {
    throw ValidationError("time step too coarse: " + std::to_string(samples_per_period) +
                          " samples per period, need >= 16");
  }
  const double n_steps_d = std::floor(duration / dt + 1e-9);
  if (n_steps_d > 1e9) throw ValidationError("trace too long (more than 1e9 samples)");
  const auto n = static_cast<std::size_t>(n_steps_d) + 1;

  const double m = osc.mass();
  const double phi = parametric_phase_radians(drive.phase);
  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const double fb = m * osc.omega_m() * options.gfb * osc.gamma_m();
  const double f0 = drive.f0;
  const double force_sd = std::sqrt(2.0 * m * osc.gamma_m() * constants::k_B * bath.temperature / dt);

  PositionTrace tr;
  tr.dt = dt;
  tr.seed = seed;
  tr.x.reserve(n);
  tr.drive_phase.reserve(n);
  if (options.record_force) tr.thermal_force.reserve(n);

  detail::Integrator integ(osc, dt);
  integ.x = options.x_initial;
  integ.v = options.v_initial;
  CounterRng rng(seed, streams::thermal_position);

  // Reference phase from the sample index keeps long runs free of accumulated drift.
  auto theta_at = [&](std::size_t i) {
    return std::fmod(w_ref * (static_cast<double>(i) * dt), constants::two_pi);
  };
  auto force = [&](double s, double c) {
    const double pump = (2.0 * s * c) * cphi + (c * c - s * s) * sphi;  // sin(2 theta + phi)
    return [=](double x, double v) {
      const double x2 = x * c - (v / w_ref) * s;
      return -kp * pump * x + f0 * c + fb * x2 * s;
    };
  };

  double th = theta_at(0);
  double s0 = std::sin(th);
  double c0 = std::cos(th);
  tr.x.push_back(integ.x);
  tr.drive_phase.push_back(th);
  for (std::size_t i = 1; i < n; ++i) {
    const double th1 = theta_at(i);
    const double s1 = std::sin(th1);
    const double c1 = std::cos(th1);
    const double fth = force_sd > 0.0 ? force_sd * rng.normal() : 0.0;
    integ.step(force(s0, c0), force(s1, c1), fth);
    if (!std::isfinite(integ.x)) throw NumericalError("position integration diverged");
    tr.x.push_back(integ.x);
    tr.drive_phase.push_back(th1);
    if (options.record_force) tr.thermal_force.push_back(fth);
    s0 = s1;
    c0 = c1;
  }
  return tr;
}

}  // namespace squeezesim::simulate
