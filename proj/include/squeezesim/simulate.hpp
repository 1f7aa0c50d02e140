#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "squeezesim/model.hpp"

// Time-domain twin of the squeezing protocol.
//
//  * simulate_rotating : slow quadratures as two Ornstein-Uhlenbeck processes,
//                        exact one-step update (no dt bias in the variance).
//  * simulate_position : full stiffness-modulated equation of motion for x(t).
//  * lockin_demodulate : digital I/Q demodulation of a position record.
//  * run_pll           : position integrator + streaming lock-in + PI loop on
//                        the drive frequency, i.e. the complete closed loop.
//
// Quadrature convention: x(t) = X1 sin(theta) + X2 cos(theta) with theta the
// phase of the electronic reference.

namespace squeezesim::simulate {

/// Inputs that produced a quadrature trace, kept alongside the samples.
struct TraceParams {
  OscillatorParams osc = OscillatorParams::from_q(1.0, 1.0, 1e3);
  ThermalBath bath;
  double gs = 0.0;
  double gfb = 0.0;
  ParametricPhase phase = ParametricPhase::deamplify;
  double f0 = 0.0;
  std::optional<QuantumReadout> readout;
  double duration = 0.0;
};

struct QuadratureTrace {
  double dt = 0.0;
  std::vector<double> x1;  // m
  std::vector<double> x2;  // m
  std::uint64_t seed = 0;
  TraceParams params;
  bool divergent = false;          // an unstable rate or a blow-up truncated the run
  std::size_t settle_samples = 0;  // leading samples to drop before statistics

  std::size_t size() const noexcept { return x1.size(); }
  std::span<const double> steady_x1() const;
  std::span<const double> steady_x2() const;
};

struct PositionTrace {
  double dt = 0.0;
  std::vector<double> x;            // m
  std::vector<double> drive_phase;  // rad, reference phase theta(t) (wrapped to [0, 2pi))
  std::vector<double> thermal_force;  // N, per-step realisation (only if requested)
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return x.size(); }
};

struct RotatingOptions {
  ParametricPhase phase = ParametricPhase::deamplify;
  double f0 = 0.0;  // coherent resonant drive; adds F0/(2 m omega_m) to dX1/dt
  double x1_initial = 0.0;
  double x2_initial = 0.0;
  /// Seconds to discard for statistics; negative selects 10 / min(Gamma_1, Gamma_2).
  double settle_time = -1.0;
  /// |X| above this many thermal standard deviations counts as divergence.
  double divergence_sigmas = 1e6;
};

/// Per-quadrature force noise intensities (double-sided, N^2/Hz in the
/// var = integral S domega/2pi convention) driving X1 and X2.
struct ForceNoise {
  double s_f1 = 0.0;  // drives X1 (thermal + backaction)
  double s_f2 = 0.0;  // drives X2 (thermal + backaction + feedback imprecision)
};

/// Without readout: 4 m Gamma_m k_B T on each quadrature. With readout: the
/// quantum thermal, backaction and feedback-imprecision intensities.
ForceNoise quadrature_force_noise(const OscillatorParams& osc, const ThermalBath& bath, double gfb,
                                  const std::optional<QuantumReadout>& readout);

/// Largest dt accepted by simulate_rotating:
/// 0.01 / (Gamma_m max(1, 1+gs, |1-gs+gfb|)), with the two rates swapped on
/// the amplifying branch.
double max_rotating_step(const OscillatorParams& osc, double gs, double gfb,
                         ParametricPhase phase = ParametricPhase::deamplify);

/// Decay rates (Gamma_1, Gamma_2) of the quadratures in rad/s.
std::pair<double, double> quadrature_rates(const OscillatorParams& osc, double gs, double gfb,
                                           ParametricPhase phase = ParametricPhase::deamplify);

QuadratureTrace simulate_rotating(const OscillatorParams& osc, const ThermalBath& bath, double gs,
                                  double gfb, const std::optional<QuantumReadout>& readout,
                                  double duration, double dt, std::uint64_t seed,
                                  const RotatingOptions& options = {});

struct PositionOptions {
  /// Ideal (infinite bandwidth) phase feedback F_fb = m omega_m Gamma_fb X2 sin(theta).
  double gfb = 0.0;
  double x_initial = 0.0;
  double v_initial = 0.0;
  bool record_force = false;
};

/// Parametric phase offset applied literally as k_p sin(omega_p t + phi_p).
/// deamplify -> 0, amplify -> pi.
double parametric_phase_radians(ParametricPhase phase);

/// Drive F0 cos(omega_p t / 2), pump k_p sin(omega_p t + phi_p), thermal force
/// with double-sided PSD 2 m Gamma_m k_B T. Requires >= 16 samples per
/// mechanical period.
PositionTrace simulate_position(const OscillatorParams& osc, const ThermalBath& bath,
                                const DriveConfig& drive, double kp, double omega_p,
                                double duration, double dt, std::uint64_t seed,
                                const PositionOptions& options = {});

struct LockinOptions {
  double bandwidth_hz = 0.0;    // -3 dB of the whole filter cascade
  double sample_rate_hz = 0.0;  // output rate; 0 selects 8 x bandwidth
  int order = 4;                // cascaded one-pole sections
};

/// Streaming I/Q demodulator: mixes with 2 sin(theta), 2 cos(theta), low-pass
/// filters and decimates.
class LockIn {
public:
  LockIn(double input_dt, const LockinOptions& options);

  /// Feeds one input sample; returns true when a decimated output is due.
  bool push(double x, double theta);

  double x1() const noexcept { return i_[order_ - 1]; }
  double x2() const noexcept { return q_[order_ - 1]; }
  double output_dt() const noexcept { return output_dt_; }
  std::size_t decimation() const noexcept { return decimation_; }
  /// Per-stage smoothing coefficient a in y += a (x - y).
  double stage_coefficient() const noexcept { return a_; }
  int order() const noexcept { return order_; }

  /// Exact power response |H(f)|^2 of the discrete cascade at input rate.
  double power_response(double f_hz) const;

private:
  double input_dt_;
  double output_dt_;
  std::size_t decimation_;
  std::size_t counter_ = 0;
  int order_;
  double a_;
  std::vector<double> i_;
  std::vector<double> q_;
};

/// Demodulates at fixed angular frequency omega (theta = omega t).
/// Throws ValidationError when the output rate cannot carry the bandwidth
/// (rate < 2 x bandwidth) or bandwidth is not well below omega / 2pi.
QuadratureTrace lockin_demodulate(const PositionTrace& trace, double omega,
                                  const LockinOptions& options);

/// Small-signal feedback rate produced by a proportional gain acting on the
/// phase error X2/X1: Gamma_fb = 4 pi k_P (k_P in Hz/rad).
double pll_feedback_rate(const PllSettings& pll);

/// Proportional gain giving a target g_fb; integral gain set to
/// integral_fraction * k_P * Gamma_m.
PllSettings pll_for_feedback(double gfb, const OscillatorParams& osc, double bandwidth_hz,
                             double integral_fraction = 0.0);

struct PllOptions {
  LockinOptions lockin;
  double initial_detuning_hz = 0.0;
  double lock_loss_fraction = 0.5;  // |X2| > fraction |X1| flags loss of lock
  double acquisition_time = 0.0;    // lock-loss check starts after this
};

struct PllResult {
  QuadratureTrace quadratures;           // demodulated, at the lock-in output rate
  std::vector<double> frequency_hz;      // drive frequency at each output sample
  bool lock_lost = false;
  double lock_lost_at = -1.0;            // s
};

PllResult run_pll(const OscillatorParams& osc, const ThermalBath& bath, const DriveConfig& drive,
                  double kp, const PllSettings& pll, double duration, double dt, std::uint64_t seed,
                  const PllOptions& options);

// Trace export.
void write_trace_csv(std::ostream& os, const QuadratureTrace& trace);
void write_trace_csv(std::ostream& os, const PositionTrace& trace);

/// Self-describing little-endian binary: magic "SQZTRACE", u32 version,
/// u32 channel count, f64 dt, u64 length, u64 seed, then channel-major f64 data.
void write_trace_binary(std::ostream& os, const QuadratureTrace& trace);
void write_trace_binary(std::ostream& os, const PositionTrace& trace);

struct BinaryTrace {
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> channels;
};
BinaryTrace read_trace_binary(std::istream& is);

}  // namespace squeezesim::simulate
