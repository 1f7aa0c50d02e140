#include <doctest.h>

#include <cmath>
#include <vector>

#include "squeezesim/analytic.hpp"
#include "squeezesim/errors.hpp"
#include "support.hpp"

using namespace squeezesim;
using namespace squeezesim::analytic;

namespace {
constexpr double two_pi = 6.283185307179586;

QuantumReadout readout(double gamma_qba, double eta) {
  QuantumReadout r;
  r.gamma_qba = gamma_qba;
  r.eta_det = eta;
  return r;
}
}  // namespace

TEST_CASE("susceptibilities") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e6, 1e4);
  const auto [c1, c2] = susceptibilities(0.0, osc, 3.0, 5.0);
  // chi_i(0) = 1 / (m w Gamma_i)
  CHECK(c1.real() == doctest::Approx(1.0 / (osc.mass() * osc.omega_m() * osc.gamma_m() * 4.0)));
  CHECK(c2.real() == doctest::Approx(1.0 / (osc.mass() * osc.omega_m() * osc.gamma_m() * 3.0)));
  CHECK(c1.imag() == 0.0);
  // |chi1|^2 halves at omega = Gamma_1 / 2.
  const auto [h1, h2] = susceptibilities(0.5 * 4.0 * osc.gamma_m(), osc, 3.0, 5.0);
  CHECK(std::norm(h1) == doctest::Approx(0.5 * std::norm(c1)));
  (void)h2;
}

TEST_CASE("classical variances and the 3 dB limit") {
  const auto v = classical_variances(0.999, 0.0, 1.0);
  CHECK(v.stable);
  CHECK(v.sigma1_sq > 0.5);
  CHECK(v.sigma1_sq < 0.5005);
  CHECK(db10(classical_variances(1.0 - 1e-9, 0.0, 1.0).sigma1_sq) == doctest::Approx(-3.0103).epsilon(1e-4));
  CHECK_THROWS_AS(classical_variances(1.0, 0.0, 1.0), InstabilityError);
  CHECK_THROWS_AS(classical_variances(2.0, 0.5, 1.0), InstabilityError);
  try {
    classical_variances(1.5, 0.0, 2.0);
  } catch (const InstabilityError& e) {
    CHECK(e.sigma1_sq() == doctest::Approx(0.8));
  }
  CHECK_THROWS_AS(classical_variances(-0.1, 0.0, 1.0), ValidationError);

  // Feedback lifts the limit: V_p / V_th = 10 V / 151 mV with g_fb = 100.
  const double gs = 10.0 / 0.151;
  const auto w = classical_variances(gs, 100.0, 1.0);
  CHECK(db10(w.sigma1_sq) == doctest::Approx(-18.27).epsilon(2e-3));
  CHECK(w.sigma2_sq == doctest::Approx(1.0 / (1.0 - gs + 100.0)));
}

TEST_CASE("capacitive figure: 39 mV threshold at 4.87 V") {
  CHECK(db10(classical_variances(4.87 / 0.039, 300.0, 1.0).sigma1_sq) == doctest::Approx(-21.0).epsilon(0.1 / 21));
}

TEST_CASE("amplitude gain on both branches") {
  CHECK(amplitude_gain(0.0, ParametricPhase::amplify) == 1.0);
  CHECK(amplitude_gain(0.5, ParametricPhase::amplify) == doctest::Approx(2.0));
  CHECK(amplitude_gain(0.5, ParametricPhase::deamplify) == doctest::Approx(1.0 / 1.5));
  CHECK_THROWS_AS(amplitude_gain(1.0, ParametricPhase::amplify), InstabilityError);
  CHECK_NOTHROW(amplitude_gain(10.0, ParametricPhase::deamplify));
  const auto osc = OscillatorParams::from_q(30e-12, two_pi * 1.3e6, 0.67e6);
  // F0 / (m w Gamma_m): 3.35e-13 m for 1 fN.
  CHECK(steady_state_amplitude(1e-15, osc, 0.0) == doctest::Approx(3.35e-13).epsilon(2e-3));
  CHECK(steady_state_amplitude(1e-15, osc, 4.0) == doctest::Approx(steady_state_amplitude(1e-15, osc, 0.0) / 5.0));
}

TEST_CASE("quantum variances, boundary and required squeezing") {
  const double zpf = 1e-15;
  const auto r0 = readout(0.0, 1.0);
  const auto th = quantum_variances(0.0, 0.0, 7.0, r0, zpf);
  CHECK(th.sigma1_sq == doctest::Approx(15.0 * zpf * zpf));
  CHECK(th.sigma2_sq == doctest::Approx(15.0 * zpf * zpf));
  CHECK(purity(th, zpf) == doctest::Approx(1.0 / 15.0));

  const auto r = readout(3.0, 0.5);
  const double gs = zero_point_boundary_gs(100.0, r);
  CHECK(gs == doctest::Approx(206.0));
  CHECK(quantum_variances(gs, gs + 10.0, 100.0, r, zpf).sigma1_sq == doctest::Approx(zpf * zpf).epsilon(1e-12));
  CHECK_THROWS_AS(quantum_variances(1.0, 1.0, 0.0, readout(0.0, 1.0), zpf), ValidationError);

  const double n = occupancy(10.0, two_pi * 1e6);
  CHECK(required_squeezing_db10(n) == doctest::Approx(56.2).epsilon(0.1 / 56.2));
}

TEST_CASE("optimal feedback minimises sigma2 and matches the stationarity relation") {
  testing::Gen gen(3);
  for (int i = 0; i < 300; ++i) {
    const double gs = gen.log_uniform(1e-2, 1e6);
    const double n = gen.log_uniform(1e-3, 1e6);
    const auto r = readout(gen.log_uniform(1e-3, 1e6), gen.uniform(0.05, 1.0));
    const double zpf = 1.0;
    const double g = optimal_feedback_gain(gs, n, r);
    REQUIRE(1.0 - gs + g > 0.0);
    const auto v = quantum_variances(gs, g, n, r, zpf);
    CHECK(v.sigma2_sq == doctest::Approx(g / (4.0 * r.g_meas())).epsilon(1e-9));
    for (double f : {0.98, 1.02}) {
      const double g2 = g * f;
      if (1.0 - gs + g2 <= 0.0) continue;
      CHECK(quantum_variances(gs, g2, n, r, zpf).sigma2_sq >= v.sigma2_sq * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("property: Heisenberg product at optimal feedback") {
  testing::Gen gen(2024);
  for (int i = 0; i < 10000; ++i) {
    const double gs = gen.log_uniform(1e-3, 1e7);
    const double n = gen.coin() ? gen.log_uniform(1e-6, 1e7) : 0.0;
    const double eta = gen.uniform(1e-3, 1.0);
    const auto r = readout(gen.log_uniform(1e-6, 1e7), eta);
    const double zpf = gen.log_uniform(1e-18, 1e-12);
    const auto v = quantum_variances(gs, optimal_feedback_gain(gs, n, r), n, r, zpf);
    CHECK(std::sqrt(v.sigma1_sq * v.sigma2_sq) >= zpf * zpf * (1.0 - 1e-9));
    CHECK(purity(v, zpf) <= 1.0 + 1e-9);
  }
}

TEST_CASE("purity stays below sqrt(eta) over the 10 K, 1 MHz map grid") {
  // A cold vacuum state is pure for any eta, so the bound is a statement
  // about this thermal grid only.
  const double n = occupancy(10.0, two_pi * 1e6);
  for (double eta : {0.77, 0.3, 1.0}) {
    for (int i = 0; i <= 60; ++i) {
      for (int j = 0; j <= 80; ++j) {
        const double gs = std::pow(10.0, 6.0 * i / 60.0);
        const auto r = readout(std::pow(10.0, -2.0 + 8.0 * j / 80.0), eta);
        const auto v = quantum_variances(gs, optimal_feedback_gain(gs, n, r), n, r, 1.0);
        CHECK(purity(v, 1.0) <= std::sqrt(eta) + 1e-6);
      }
    }
  }
}

TEST_CASE("detection SNR") {
  const auto r = readout(2.0, 0.5);
  CHECK(detection_snr(3.0, 4.0, r) == doctest::Approx(8.0 * 1.0 * (9.0 + 4.0) / 16.0));
}

TEST_CASE("quadrature PSDs integrate to the variances") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e3);
  const ThermalBath bath{300.0};
  const double gs = 4.0, gfb = 9.0;
  // Integrate S(w) dw / 2pi over a wide band with the trapezoid rule on a tan grid.
  auto integrate = [&](SpectrumKind k, const std::optional<QuantumReadout>& ro) {
    const int n = 200001;
    std::vector<double> u(n), w(n);
    for (int i = 0; i < n; ++i) {
      u[i] = -0.5 * M_PI + M_PI * (i + 0.5) / n;
      w[i] = osc.gamma_m() * std::tan(u[i]);
    }
    const auto s = quadrature_psd(w, osc, bath, gs, gfb, k, ro);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += s.values[i] * osc.gamma_m() / std::pow(std::cos(u[i]), 2) * (M_PI / n);
    return acc / two_pi;
  };
  const double s0 = classical_sigma0_sq(osc, bath);
  const auto v = classical_variances(gs, gfb, s0);
  CHECK(integrate(SpectrumKind::X1, std::nullopt) == doctest::Approx(v.sigma1_sq).epsilon(1e-4));
  CHECK(integrate(SpectrumKind::X2, std::nullopt) == doctest::Approx(v.sigma2_sq).epsilon(1e-4));

  const auto r = readout(0.3, 0.8);
  const double zpf = zero_point_amplitude(osc);
  const auto q = quantum_variances(gs, gfb, bath.nbar(osc.omega_m()), r, zpf);
  CHECK(integrate(SpectrumKind::X1, r) == doctest::Approx(q.sigma1_sq).epsilon(1e-4));
  CHECK(integrate(SpectrumKind::X2, r) == doctest::Approx(q.sigma2_sq).epsilon(1e-4));
  CHECK_THROWS_AS(quadrature_psd(std::vector<double>{0.0}, osc, bath, 3.0, 1.0, SpectrumKind::X1),
                  InstabilityError);
}

TEST_CASE("property: in-loop homodyne spectrum stays non-negative and can squash") {
  testing::Gen gen(77);
  std::vector<double> w(401);
  for (int i = 0; i < 1000; ++i) {
    const auto osc = OscillatorParams::from_q(gen.log_uniform(1e-15, 1e-9), two_pi * gen.log_uniform(1e4, 1e7),
                                              gen.log_uniform(1e3, 1e9));
    const ThermalBath bath{gen.log_uniform(1e-3, 300.0)};
    const double gs = gen.log_uniform(1e-3, 1e4);
    const double gfb = std::max(0.0, gs - 1.0) + gen.log_uniform(1e-3, 1e4);
    const auto r = readout(gen.log_uniform(1e-3, 1e3), gen.uniform(0.01, 1.0));
    const double g2 = osc.gamma_m() * (1.0 - gs + gfb);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = g2 * (static_cast<double>(k) / 20.0);
    const auto s = homodyne_psd(w, osc, bath, gs, gfb, r, SpectrumKind::Y2);
    for (double v : s.values) CHECK(v >= 0.0);
  }
  // Cold, strongly measured oscillator with heavy feedback squashes below shot noise.
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e6, 1e6);
  const auto s = homodyne_psd(std::vector<double>{0.0}, osc, ThermalBath{0.0}, 0.0, 50.0, readout(1.0, 1.0),
                              SpectrumKind::Y2);
  CHECK(s.values[0] < 0.5);
  CHECK(s.values[0] >= 0.0);
}
