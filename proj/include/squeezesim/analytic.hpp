#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "squeezesim/model.hpp"

// Closed-form steady state of the feedback-stabilised parametric oscillator.
//
// Frequencies `omega` are rotating-frame offsets in rad/s. Spectra are
// double-sided in omega with the normalisation  var = integral S(omega) domega / 2pi.

namespace squeezesim::analytic {

struct QuadratureVariances {
  double sigma1_sq = 0.0;  // m^2
  double sigma2_sq = 0.0;  // m^2
  bool stable = false;
};

enum class SpectrumKind { X1, X2, Y1, Y2 };

struct SpectrumModel {
  std::vector<double> omega;   // rad/s
  std::vector<double> values;  // m^2 s for X*, shot-noise units for Y*
  SpectrumKind kind = SpectrumKind::X1;
};

/// chi_1, chi_2 of the amplitude and phase quadratures. Defined for any g_s;
/// stability is reported elsewhere.
std::pair<std::complex<double>, std::complex<double>> susceptibilities(
    double omega, const OscillatorParams& osc, double gs, double gfb);

/// sigma1^2 = sigma0^2/(1+gs), sigma2^2 = sigma0^2/(1-gs+gfb).
/// Throws InstabilityError (carrying sigma1^2) when 1 - gs + gfb <= 0.
QuadratureVariances classical_variances(double gs, double gfb, double sigma0_sq);

/// |X1(gs) / X1(0)|: 1/(1+gs) when deamplifying, 1/(1-gs) when amplifying.
/// Throws InstabilityError for amplify at gs >= 1.
double amplitude_gain(double gs, ParametricPhase phase);

/// Coherent amplitude X1_bar = F0 / (m omega_m Gamma_m (1+gs)); X2_bar = 0.
double steady_state_amplitude(double f0, const OscillatorParams& osc, double gs);

/// Variances including thermal, quantum backaction and feedback-imprecision heating.
/// Throws InstabilityError when 1 - gs + gfb <= 0 and ValidationError when
/// gfb > 0 with g_meas == 0.
QuadratureVariances quantum_variances(double gs, double gfb, double nbar,
                                      const QuantumReadout& readout, double x_zpf);

/// Feedback gain minimising sigma2^2: -B + sqrt(B^2 + 8 g_meas A) with
/// B = 1 - gs and A = 2 nbar + 1 + 2 gamma_qba. Always inside the stable region.
double optimal_feedback_gain(double gs, double nbar, const QuantumReadout& readout);

/// Gaussian-state purity x_zpf^2 / (sigma1 sigma2).
double purity(const QuadratureVariances& v, double x_zpf);

/// S_X1(0) / S_nn with S_nn = x_zpf^2 / (2 Gamma_meas):
/// 8 g_meas (2 nbar + 1 + 2 gamma_qba) / (1 + gs)^2.
double detection_snr(double gs, double nbar, const QuantumReadout& readout);

/// g_s at which sigma1^2 (quantum) equals x_zpf^2: 2 nbar + 2 gamma_qba.
double zero_point_boundary_gs(double nbar, const QuantumReadout& readout);

/// Thermomechanical squeezing needed to bring a thermal state to x_zpf:
/// 10 log10(2 nbar + 1).
double required_squeezing_db10(double nbar);

/// Motional quadrature PSD. Without a readout the classical thermal form
/// (sigma0^2 substituted for x_zpf^2 (2 nbar + 1)) is used.
SpectrumModel quadrature_psd(std::span<const double> omega, const OscillatorParams& osc,
                             const ThermalBath& bath, double gs, double gfb, SpectrumKind which,
                             const std::optional<QuantumReadout>& readout = std::nullopt);

/// Shot-noise-normalised homodyne PSD of Y1 or Y2; Y2 includes the in-loop
/// squashing term -(Gamma_fb/4) Gamma_2 / (omega^2 + (Gamma_2/2)^2).
SpectrumModel homodyne_psd(std::span<const double> omega, const OscillatorParams& osc,
                           const ThermalBath& bath, double gs, double gfb,
                           const QuantumReadout& readout, SpectrumKind which);

inline double db10(double ratio) { return 10.0 * std::log10(ratio); }
inline double db20(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace squeezesim::analytic
