#include <algorithm>
#include <cmath>
#include <string>

#include "integrator.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/rng.hpp"
#include "squeezesim/simulate.hpp"

namespace squeezesim::simulate {

double pll_feedback_rate(const PllSettings& pll) {
  return 2.0 * constants::two_pi * pll.proportional_hz_per_rad;
}

PllSettings pll_for_feedback(double gfb, const OscillatorParams& osc, double bandwidth_hz,
                             double integral_fraction) {
  if (!(gfb >= 0.0)) throw ValidationError("gfb must be >= 0");
  if (!(integral_fraction >= 0.0)) throw ValidationError("integral fraction must be >= 0");
  PllSettings s;
  s.proportional_hz_per_rad = gfb * osc.gamma_m() / (2.0 * constants::two_pi);
  s.integral_hz_per_rad_s = integral_fraction * s.proportional_hz_per_rad * osc.gamma_m();
  s.bandwidth_hz = bandwidth_hz;
  return s;
}

PllResult run_pll(const OscillatorParams& osc, const ThermalBath& bath, const DriveConfig& drive,
                  double kp, const PllSettings& pll, double duration, double dt, std::uint64_t seed,
                  const PllOptions& options) {
  if (!(kp >= 0.0) || !std::isfinite(kp)) throw ValidationError("kp must be >= 0");
  if (!(bath.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be > 0");
  if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
  if (!std::isfinite(pll.proportional_hz_per_rad) || !std::isfinite(pll.integral_hz_per_rad_s))
    throw ValidationError("PLL gains must be finite");
  if (!(pll.bandwidth_hz >= 0.0)) throw ValidationError("PLL bandwidth must be >= 0");
  if (!(options.lock_loss_fraction > 0.0)) throw ValidationError("lock-loss fraction must be > 0");
  const double f_m = osc.omega_m() / constants::two_pi;
  if (constants::two_pi / (osc.omega_m() * dt) < 16.0 * (1.0 - 1e-12))
    throw ValidationError("time step too coarse: need >= 16 samples per period");
  if (options.lockin.bandwidth_hz > 0.1 * f_m)
    throw ValidationError("lock-in bandwidth must be well below the mechanical frequency (<= 10%)");
  const double n_steps_d = std::floor(duration / dt + 1e-9);
  if (n_steps_d > 4e10) throw ValidationError("PLL run too long");
  const auto n = static_cast<std::size_t>(n_steps_d);

  LockIn li(dt, options.lockin);

  const double m = osc.mass();
  const double phi = parametric_phase_radians(drive.phase);
  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const double f0 = drive.f0;
  const double force_sd = std::sqrt(2.0 * m * osc.gamma_m() * constants::k_B * bath.temperature / dt);
  const double err_a = pll.bandwidth_hz > 0.0 ? -std::expm1(-constants::two_pi * pll.bandwidth_hz * dt) : 1.0;

  PllResult res;
  QuadratureTrace& q = res.quadratures;
  q.dt = li.output_dt();
  q.seed = seed;
  q.params.osc = osc;
  q.params.bath = bath;
  q.params.gs = gs_from_kp(kp, osc);
  q.params.gfb = pll_feedback_rate(pll) / osc.gamma_m();
  q.params.phase = drive.phase;
  q.params.f0 = f0;
  q.params.duration = duration;
  const std::size_t n_out = n / li.decimation() + 1;
  q.x1.reserve(n_out);
  q.x2.reserve(n_out);
  res.frequency_hz.reserve(n_out);

  detail::Integrator integ(osc, dt);
  CounterRng rng(seed, streams::thermal_position);

  const double f_start = f_m + options.initial_detuning_hz;
  double freq = f_start;
  double theta = 0.0;
  double err_f = 0.0;
  double integral = 0.0;

  auto force = [&](double s, double c) {
    const double pump = (2.0 * s * c) * cphi + (c * c - s * s) * sphi;
    return [=](double x, double) { return -kp * pump * x + f0 * c; };
  };

  double s0 = 0.0;
  double c0 = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    theta += constants::two_pi * freq * dt;
    if (theta >= constants::two_pi) theta -= constants::two_pi;
    const double s1 = std::sin(theta);
    const double c1 = std::cos(theta);
    const double fth = force_sd > 0.0 ? force_sd * rng.normal() : 0.0;
    integ.step(force(s0, c0), force(s1, c1), fth);
    if (!std::isfinite(integ.x)) {
      q.divergent = true;
      break;
    }
    s0 = s1;
    c0 = c1;

    const bool out = li.push(integ.x, theta);
    const double x1 = li.x1();
    const double x2 = li.x2();
    // Phase error of the motion relative to the reference; positive X2
    // means the drive lags, so the frequency is raised.
    const double err = std::atan2(x2, x1);
    err_f += err_a * (err - err_f);
    integral += err_f * dt;
    freq = f_start + pll.proportional_hz_per_rad * err_f + pll.integral_hz_per_rad_s * integral;

    const double t = static_cast<double>(i) * dt;
    if (!res.lock_lost && t >= options.acquisition_time &&
        std::abs(x2) > options.lock_loss_fraction * std::abs(x1)) {
      res.lock_lost = true;
      res.lock_lost_at = t;
    }
    if (out) {
      q.x1.push_back(x1);
      q.x2.push_back(x2);
      res.frequency_hz.push_back(freq);
    }
  }
  const double tau = dt / li.stage_coefficient();
  const double settle = options.acquisition_time + 20.0 * tau;
  q.settle_samples = std::min(q.x1.size(), static_cast<std::size_t>(std::ceil(settle / q.dt)));
  return res;
}

}  // namespace squeezesim::simulate
