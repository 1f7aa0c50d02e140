#pragma once

#include <optional>

namespace squeezesim {

// CODATA 2018 exact values (SI redefinition, 2019).
namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s  (h / 2pi, h = 6.62607015e-34 exact)
inline constexpr double k_B = 1.380649e-23;      // J/K  exact
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
}  // namespace constants

/// Lumped single-mode mechanical oscillator. All fields SI.
///
/// Construct through `from_damping` or `from_q`; both enforce
/// mass > 0, omega_m > 0, gamma_m > 0 and keep Q * gamma_m == omega_m.
class OscillatorParams {
public:
  static OscillatorParams from_damping(double mass_kg, double omega_m, double gamma_m);
  static OscillatorParams from_q(double mass_kg, double omega_m, double q);

  double mass() const noexcept { return mass_; }
  double omega_m() const noexcept { return omega_m_; }
  double gamma_m() const noexcept { return gamma_m_; }
  double q() const noexcept { return omega_m_ / gamma_m_; }
  /// k_m = m * omega_m^2
  double stiffness() const noexcept { return mass_ * omega_m_ * omega_m_; }

  /// Rotating-frame treatment assumes Q >> 1; flag anything below 100.
  bool low_q_warning() const noexcept { return q() < 100.0; }

  bool operator==(const OscillatorParams&) const = default;

private:
  OscillatorParams(double m, double w, double g) : mass_(m), omega_m_(w), gamma_m_(g) {}

  double mass_;
  double omega_m_;
  double gamma_m_;
};

struct ThermalBath {
  double temperature = 0.0;  // K

  /// Bose-Einstein occupancy at the given mode frequency.
  double nbar(double omega_m) const;

  bool operator==(const ThermalBath&) const = default;
};

/// Operating point of the parametric drive relative to the X1 quadrature.
/// `deamplify` is phi_p = 0, `amplify` the phase that anti-damps X1.
enum class ParametricPhase { deamplify, amplify };

struct DriveConfig {
  double f0 = 0.0;  // N, resonant drive amplitude
  ParametricPhase phase = ParametricPhase::deamplify;
  double gs = 0.0;                  // Gamma_s / Gamma_m
  std::optional<double> kp;         // N/m; if present must agree with gs

  /// Throws ValidationError on gs < 0 or kp/gs mismatch (relative 1e-12).
  void validate(const OscillatorParams& osc) const;

  bool operator==(const DriveConfig&) const = default;
};

/// Proportional-integral phase-locked loop acting on the drive frequency.
struct PllSettings {
  double proportional_hz_per_rad = 0.0;
  double integral_hz_per_rad_s = 0.0;
  double bandwidth_hz = 0.0;  // one-pole filter on the phase error

  bool operator==(const PllSettings&) const = default;
};

struct FeedbackConfig {
  double gfb = 0.0;  // Gamma_fb / Gamma_m
  std::optional<PllSettings> pll;

  void validate() const;

  bool operator==(const FeedbackConfig&) const = default;
};

/// Resonantly probed bad-cavity readout, rates normalised to Gamma_m.
struct QuantumReadout {
  double gamma_qba = 0.0;  // Gamma_qba / Gamma_m
  double eta_det = 1.0;    // detection efficiency in (0, 1]
  std::optional<double> g;      // rad/s, optomechanical coupling
  std::optional<double> kappa;  // rad/s, cavity decay

  /// Build from (g, kappa): Gamma_qba = 4 g^2 / kappa.
  static QuantumReadout from_coupling(double g, double kappa, double eta_det,
                                      const OscillatorParams& osc);

  /// g_meas = eta_det * gamma_qba
  double g_meas() const noexcept { return eta_det * gamma_qba; }

  void validate() const;

  bool operator==(const QuantumReadout&) const = default;
};

/// Bose-Einstein occupancy 1 / (exp(hbar omega / k_B T) - 1); zero at T = 0.
double occupancy(double temperature_k, double omega_m);

/// x_zpf = sqrt(hbar / (2 m omega_m))
double zero_point_amplitude(const OscillatorParams& osc);

/// sigma_0^2 = k_B T / (m omega_m^2), the classical thermal variance.
double classical_sigma0_sq(const OscillatorParams& osc, const ThermalBath& bath);

/// g_s implied by a stiffness modulation k_p: k_p Q / (2 k_m).
double gs_from_kp(double kp, const OscillatorParams& osc);

/// Inverse of gs_from_kp.
double kp_from_gs(double gs, const OscillatorParams& osc);

}  // namespace squeezesim
