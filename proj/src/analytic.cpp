#include "squeezesim/analytic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "squeezesim/errors.hpp"

namespace squeezesim::analytic {

namespace {

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be >= 0");
}

// Normalised decay rate of the anti-squeezed quadrature, 1 - gs + gfb.
double phase_rate(double gs, double gfb) { return 1.0 - gs + gfb; }

}  // namespace

std::pair<std::complex<double>, std::complex<double>> susceptibilities(
    double omega, const OscillatorParams& osc, double gs, double gfb) {
  using namespace std::complex_literals;
  const double pref = 2.0 * osc.mass() * osc.omega_m();
  const double half = 0.5 * osc.gamma_m();
  const std::complex<double> chi1 = 1.0 / (pref * (-1i * omega + half * (1.0 + gs)));
  const std::complex<double> chi2 = 1.0 / (pref * (-1i * omega + half * phase_rate(gs, gfb)));
  return {chi1, chi2};
}

QuadratureVariances classical_variances(double gs, double gfb, double sigma0_sq) {
  require_nonnegative(gs, "gs");
  require_nonnegative(gfb, "gfb");
  QuadratureVariances v;
  v.sigma1_sq = sigma0_sq / (1.0 + gs);
  const double r2 = phase_rate(gs, gfb);
  if (!(r2 > 0.0)) {
    throw InstabilityError("phase quadrature unstable: 1 - gs + gfb = " + std::to_string(r2),
                           v.sigma1_sq);
  }
  v.sigma2_sq = sigma0_sq / r2;
  v.stable = true;
  return v;
}

double amplitude_gain(double gs, ParametricPhase phase) {
  require_nonnegative(gs, "gs");
  if (phase == ParametricPhase::deamplify) return 1.0 / (1.0 + gs);
  if (gs >= 1.0) {
    throw InstabilityError("parametric oscillation threshold reached (gs >= 1)",
                           std::numeric_limits<double>::infinity());
  }
  return 1.0 / (1.0 - gs);
}

double steady_state_amplitude(double f0, const OscillatorParams& osc, double gs) {
  require_nonnegative(gs, "gs");
  return f0 / (osc.mass() * osc.omega_m() * osc.gamma_m() * (1.0 + gs));
}

QuadratureVariances quantum_variances(double gs, double gfb, double nbar,
                                      const QuantumReadout& readout, double x_zpf) {
  require_nonnegative(gs, "gs");
  require_nonnegative(gfb, "gfb");
  require_nonnegative(nbar, "nbar");
  readout.validate();
  const double zpf2 = x_zpf * x_zpf;
  const double thermal = 2.0 * nbar + 1.0;
  const double gm = readout.g_meas();

  QuadratureVariances v;
  v.sigma1_sq = zpf2 * (thermal + 2.0 * readout.gamma_qba) / (1.0 + gs);
  const double r2 = phase_rate(gs, gfb);
  if (!(r2 > 0.0)) {
    throw InstabilityError("phase quadrature unstable: 1 - gs + gfb = " + std::to_string(r2),
                           v.sigma1_sq);
  }
  double fb_heating = 0.0;
  if (gfb > 0.0) {
    if (!(gm > 0.0)) throw ValidationError("feedback requires g_meas > 0 (no measurement record)");
    fb_heating = gfb * gfb / (4.0 * gm);
  }
  v.sigma2_sq = zpf2 * (thermal + 0.5 * (fb_heating + 4.0 * readout.gamma_qba)) / r2;
  v.stable = true;
  return v;
}

double optimal_feedback_gain(double gs, double nbar, const QuantumReadout& readout) {
  require_nonnegative(gs, "gs");
  require_nonnegative(nbar, "nbar");
  const double gm = readout.g_meas();
  if (!(gm > 0.0)) throw ValidationError("optimal feedback requires g_meas > 0");
  const double b = 1.0 - gs;
  const double a = 2.0 * nbar + 1.0 + 2.0 * readout.gamma_qba;
  const double disc = std::sqrt(b * b + 8.0 * gm * a);
  // Rationalised form for b > 0 avoids cancellation when 8 g_meas A << B^2.
  if (b > 0.0) return 8.0 * gm * a / (b + disc);
  return disc - b;
}

double purity(const QuadratureVariances& v, double x_zpf) {
  if (!v.stable) throw ValidationError("purity needs stable variances");
  return x_zpf * x_zpf / std::sqrt(v.sigma1_sq * v.sigma2_sq);
}

double detection_snr(double gs, double nbar, const QuantumReadout& readout) {
  require_nonnegative(gs, "gs");
  const double a = 2.0 * nbar + 1.0 + 2.0 * readout.gamma_qba;
  return 8.0 * readout.g_meas() * a / ((1.0 + gs) * (1.0 + gs));
}

double zero_point_boundary_gs(double nbar, const QuantumReadout& readout) {
  return 2.0 * nbar + 2.0 * readout.gamma_qba;
}

double required_squeezing_db10(double nbar) { return db10(2.0 * nbar + 1.0); }

SpectrumModel quadrature_psd(std::span<const double> omega, const OscillatorParams& osc,
                             const ThermalBath& bath, double gs, double gfb, SpectrumKind which,
                             const std::optional<QuantumReadout>& readout) {
  require_nonnegative(gs, "gs");
  require_nonnegative(gfb, "gfb");
  if (which != SpectrumKind::X1 && which != SpectrumKind::X2)
    throw ValidationError("quadrature_psd computes X1 or X2");

  const double gm_rate = osc.gamma_m();
  const double g1 = gm_rate * (1.0 + gs);
  const double g2 = gm_rate * phase_rate(gs, gfb);
  if (!(g2 > 0.0)) {
    throw InstabilityError("phase quadrature unstable: Gamma_2 <= 0",
                           classical_sigma0_sq(osc, bath) / (1.0 + gs));
  }

  double numerator = 0.0;
  if (!readout) {
    numerator = gm_rate * classical_sigma0_sq(osc, bath);
  } else {
    readout->validate();
    const double zpf2 = std::pow(zero_point_amplitude(osc), 2);
    const double nbar = bath.nbar(osc.omega_m());
    const double g_qba = readout->gamma_qba * gm_rate;
    numerator = zpf2 * (gm_rate * (2.0 * nbar + 1.0) + 2.0 * g_qba);
    if (which == SpectrumKind::X2 && gfb > 0.0) {
      const double g_meas = readout->g_meas() * gm_rate;
      if (!(g_meas > 0.0)) throw ValidationError("feedback requires g_meas > 0");
      const double g_fb = gfb * gm_rate;
      numerator += zpf2 * g_fb * g_fb / (8.0 * g_meas);
    }
  }

  const double half = 0.5 * (which == SpectrumKind::X1 ? g1 : g2);
  SpectrumModel out;
  out.kind = which;
  out.omega.assign(omega.begin(), omega.end());
  out.values.reserve(omega.size());
  for (double w : omega) out.values.push_back(numerator / (w * w + half * half));
  return out;
}

SpectrumModel homodyne_psd(std::span<const double> omega, const OscillatorParams& osc,
                           const ThermalBath& bath, double gs, double gfb,
                           const QuantumReadout& readout, SpectrumKind which) {
  if (which != SpectrumKind::Y1 && which != SpectrumKind::Y2)
    throw ValidationError("homodyne_psd computes Y1 or Y2");
  if (!(readout.g_meas() > 0.0)) throw ValidationError("homodyne PSD requires g_meas > 0");

  const SpectrumKind motion = which == SpectrumKind::Y1 ? SpectrumKind::X1 : SpectrumKind::X2;
  SpectrumModel sx = quadrature_psd(omega, osc, bath, gs, gfb, motion, readout);

  const double gm_rate = osc.gamma_m();
  const double zpf2 = std::pow(zero_point_amplitude(osc), 2);
  const double transduction = readout.g_meas() * gm_rate / zpf2;
  const double g2 = gm_rate * phase_rate(gs, gfb);
  const double g_fb = gfb * gm_rate;

  SpectrumModel out;
  out.kind = which;
  out.omega = sx.omega;
  out.values.reserve(sx.values.size());
  for (std::size_t i = 0; i < sx.values.size(); ++i) {
    double s = 0.5 + transduction * sx.values[i];
    if (which == SpectrumKind::Y2) {
      const double w = sx.omega[i];
      s -= 0.25 * g_fb * g2 / (w * w + 0.25 * g2 * g2);
    }
    out.values.push_back(s);
  }
  return out;
}

}  // namespace squeezesim::analytic
