#include "squeezesim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "squeezesim/errors.hpp"

namespace squeezesim {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

OscillatorParams OscillatorParams::from_damping(double mass_kg, double omega_m, double gamma_m) {
  if (!positive_finite(mass_kg)) throw ValidationError("oscillator.mass must be > 0");
  if (!positive_finite(omega_m)) throw ValidationError("oscillator.omega_m must be > 0");
  if (!positive_finite(gamma_m)) throw ValidationError("oscillator.gamma_m must be > 0");
  return OscillatorParams(mass_kg, omega_m, gamma_m);
}

OscillatorParams OscillatorParams::from_q(double mass_kg, double omega_m, double q) {
  if (!positive_finite(q)) throw ValidationError("oscillator.q must be > 0");
  if (!positive_finite(omega_m)) throw ValidationError("oscillator.omega_m must be > 0");
  return from_damping(mass_kg, omega_m, omega_m / q);
}

double ThermalBath::nbar(double omega_m) const { return occupancy(temperature, omega_m); }

void DriveConfig::validate(const OscillatorParams& osc) const {
  if (!(gs >= 0.0) || !std::isfinite(gs)) throw ValidationError("drive.gs must be >= 0");
  if (!std::isfinite(f0)) throw ValidationError("drive.f0 must be finite");
  if (kp) {
    const double implied = gs_from_kp(*kp, osc);
    const double scale = std::max(std::abs(implied), std::abs(gs));
    if (scale > 0.0 && std::abs(implied - gs) > 1e-12 * scale) {
      throw ValidationError("drive.kp and drive.gs disagree: kp implies gs = " +
                            std::to_string(implied));
    }
  }
}

void FeedbackConfig::validate() const {
  if (!(gfb >= 0.0) || !std::isfinite(gfb)) throw ValidationError("feedback.gfb must be >= 0");
  if (pll) {
    if (!std::isfinite(pll->proportional_hz_per_rad) || !std::isfinite(pll->integral_hz_per_rad_s))
      throw ValidationError("feedback.pll gains must be finite");
    if (!(pll->bandwidth_hz > 0.0)) throw ValidationError("feedback.pll.bandwidth must be > 0");
  }
}

QuantumReadout QuantumReadout::from_coupling(double g, double kappa, double eta_det,
                                             const OscillatorParams& osc) {
  if (!positive_finite(kappa)) throw ValidationError("readout.kappa must be > 0");
  QuantumReadout r;
  r.g = g;
  r.kappa = kappa;
  r.eta_det = eta_det;
  r.gamma_qba = 4.0 * g * g / kappa / osc.gamma_m();
  r.validate();
  return r;
}

void QuantumReadout::validate() const {
  if (!(eta_det > 0.0 && eta_det <= 1.0)) throw ValidationError("readout.eta_det must be in (0, 1]");
  if (!(gamma_qba >= 0.0) || !std::isfinite(gamma_qba))
    throw ValidationError("readout.gamma_qba must be >= 0");
}

double occupancy(double temperature_k, double omega_m) {
  if (!(temperature_k >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (!positive_finite(omega_m)) throw ValidationError("omega_m must be > 0");
  if (temperature_k == 0.0) return 0.0;
  const double x = constants::hbar * omega_m / (constants::k_B * temperature_k);
  // expm1 keeps full precision in the high-temperature limit x -> 0
  return 1.0 / std::expm1(x);
}

double zero_point_amplitude(const OscillatorParams& osc) {
  return std::sqrt(constants::hbar / (2.0 * osc.mass() * osc.omega_m()));
}

double classical_sigma0_sq(const OscillatorParams& osc, const ThermalBath& bath) {
  if (!(bath.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  return constants::k_B * bath.temperature / osc.stiffness();
}

double gs_from_kp(double kp, const OscillatorParams& osc) {
  return kp * osc.q() / (2.0 * osc.stiffness());
}

double kp_from_gs(double gs, const OscillatorParams& osc) {
  return gs * 2.0 * osc.stiffness() / osc.q();
}

}  // namespace squeezesim
