#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "squeezesim/analytic.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/simulate.hpp"
#include "support.hpp"

using namespace squeezesim;
using namespace squeezesim::simulate;

namespace {
constexpr double two_pi = 6.283185307179586;

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

// Standard error of a sample variance of an OU process with rate Gamma
// (amplitude decay Gamma/2) observed for time T: sigma^2 sqrt(4 / (Gamma T)).
double ou_variance_se(double var, double gamma, double t) { return var * std::sqrt(4.0 / (gamma * t)); }
}  // namespace

TEST_CASE("rotating: step limit and rates") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const auto [g1, g2] = quadrature_rates(osc, 3.0, 4.0);
  CHECK(g1 == doctest::Approx(4.0 * osc.gamma_m()));
  CHECK(g2 == doctest::Approx(2.0 * osc.gamma_m()));
  const auto [a1, a2] = quadrature_rates(osc, 0.5, 4.0, ParametricPhase::amplify);
  CHECK(a1 == doctest::Approx(0.5 * osc.gamma_m()));
  CHECK(a2 == doctest::Approx(5.5 * osc.gamma_m()));
  const double dt = max_rotating_step(osc, 3.0, 4.0);
  CHECK(dt == doctest::Approx(0.01 / (4.0 * osc.gamma_m())));
  CHECK_THROWS_AS(simulate_rotating(osc, ThermalBath{300}, 3.0, 4.0, std::nullopt, 1.0, 1.01 * dt, 1),
                  ValidationError);
  CHECK_THROWS_AS(simulate_rotating(osc, ThermalBath{300}, -1.0, 0.0, std::nullopt, 1.0, dt, 1), ValidationError);
}

TEST_CASE("rotating: variances match the closed form") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const ThermalBath bath{300.0};
  const double s0 = classical_sigma0_sq(osc, bath);
  struct Case { double gs, gfb; };
  for (Case c : {Case{0, 0}, Case{5, 10}, Case{0.9, 0}}) {
    CAPTURE(c.gs);
    const auto [g1, g2] = quadrature_rates(osc, c.gs, c.gfb);
    const double t = 4000.0 / std::min(g1, g2);
    const auto tr = simulate_rotating(osc, bath, c.gs, c.gfb, std::nullopt, t, max_rotating_step(osc, c.gs, c.gfb),
                                      7);
    CHECK_FALSE(tr.divergent);
    const auto v = analytic::classical_variances(c.gs, c.gfb, s0);
    const double t_obs = tr.dt * tr.steady_x1().size();
    CHECK(std::abs(testing::variance(copy(tr.steady_x1())) - v.sigma1_sq) < 4 * ou_variance_se(v.sigma1_sq, g1, t_obs));
    CHECK(std::abs(testing::variance(copy(tr.steady_x2())) - v.sigma2_sq) < 4 * ou_variance_se(v.sigma2_sq, g2, t_obs));
  }
}

TEST_CASE("rotating: exact update has no step-size bias") {
  // Huge steps relative to the decay would bias an Euler scheme by O(Gamma dt).
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const ThermalBath bath{300.0};
  const double s0 = classical_sigma0_sq(osc, bath);
  const double dt = max_rotating_step(osc, 0.0, 0.0);
  std::vector<double> est;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto tr = simulate_rotating(osc, bath, 0.0, 0.0, std::nullopt, 2000.0 / osc.gamma_m(), dt, seed);
    est.push_back(testing::variance(copy(tr.steady_x1())));
  }
  const double se = std::sqrt(testing::variance(est) / est.size());
  CHECK(std::abs(testing::mean(est) - s0) < 4 * se);
}

TEST_CASE("rotating: quantum noise budget") {
  const auto osc = OscillatorParams::from_q(30e-12, two_pi * 1e6, 1e6);
  const ThermalBath bath{0.01};
  QuantumReadout ro;
  ro.gamma_qba = 0.4;
  ro.eta_det = 0.6;
  const double gs = 3.0, gfb = 6.0;
  const double zpf = zero_point_amplitude(osc);
  const auto v = analytic::quantum_variances(gs, gfb, bath.nbar(osc.omega_m()), ro, zpf);
  const auto [g1, g2] = quadrature_rates(osc, gs, gfb);
  const auto tr = simulate_rotating(osc, bath, gs, gfb, ro, 4000.0 / std::min(g1, g2), max_rotating_step(osc, gs, gfb), 3);
  const double t_obs = tr.dt * tr.steady_x1().size();
  CHECK(std::abs(testing::variance(copy(tr.steady_x1())) - v.sigma1_sq) < 4 * ou_variance_se(v.sigma1_sq, g1, t_obs));
  CHECK(std::abs(testing::variance(copy(tr.steady_x2())) - v.sigma2_sq) < 4 * ou_variance_se(v.sigma2_sq, g2, t_obs));
}

TEST_CASE("rotating: coherent drive sets the mean amplitude") {
  const auto osc = OscillatorParams::from_q(30e-12, two_pi * 1.3e6, 1e4);
  RotatingOptions opt;
  opt.f0 = 1e-12;
  for (double gs : {0.0, 4.0}) {
    const auto tr = simulate_rotating(osc, ThermalBath{0.0}, gs, 2 * gs, std::nullopt, 50.0 / osc.gamma_m(),
                                      max_rotating_step(osc, gs, 2 * gs), 1, opt);
    CHECK(tr.x1.back() == doctest::Approx(analytic::steady_state_amplitude(opt.f0, osc, gs)).epsilon(1e-9));
    CHECK(tr.x2.back() == 0.0);
  }
  opt.phase = ParametricPhase::amplify;
  const auto tr = simulate_rotating(osc, ThermalBath{0.0}, 0.5, 0.0, std::nullopt, 100.0 / osc.gamma_m(),
                                    max_rotating_step(osc, 0.5, 0.0, ParametricPhase::amplify), 1, opt);
  CHECK(tr.x1.back() / analytic::steady_state_amplitude(opt.f0, osc, 0.0) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("rotating: unstable rate flags divergence") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const auto tr = simulate_rotating(osc, ThermalBath{300}, 1.5, 0.0, std::nullopt, 1e4 / osc.gamma_m(),
                                    max_rotating_step(osc, 1.5, 0.0), 1);
  CHECK(tr.divergent);
  CHECK(tr.size() < static_cast<std::size_t>(1e4 / osc.gamma_m() / max_rotating_step(osc, 1.5, 0.0)));
}

TEST_CASE("rotating: reproducible by seed") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const double dt = max_rotating_step(osc, 1.0, 2.0);
  const auto a = simulate_rotating(osc, ThermalBath{300}, 1.0, 2.0, std::nullopt, 10.0 / osc.gamma_m(), dt, 5);
  const auto b = simulate_rotating(osc, ThermalBath{300}, 1.0, 2.0, std::nullopt, 10.0 / osc.gamma_m(), dt, 5);
  const auto c = simulate_rotating(osc, ThermalBath{300}, 1.0, 2.0, std::nullopt, 10.0 / osc.gamma_m(), dt, 6);
  CHECK(a.x1 == b.x1);
  CHECK(a.x2 == b.x2);
  CHECK(a.x1 != c.x1);
}

TEST_CASE("position: thermal variance is k_B T / k") {
  const auto osc = OscillatorParams::from_q(1e-15, two_pi * 1e3, 100.0);
  const ThermalBath bath{300.0};
  const double dt = 1.0 / (1e3 * 32.0);
  const double t = 3000.0 / osc.gamma_m();
  const auto tr = simulate_position(osc, bath, DriveConfig{}, 0.0, 2.0 * osc.omega_m(), t, dt, 4);
  std::vector<double> x(tr.x.begin() + tr.size() / 20, tr.x.end());
  const double s0 = classical_sigma0_sq(osc, bath);
  CHECK(testing::variance(x) == doctest::Approx(s0).epsilon(0.08));
  CHECK_THROWS_AS(simulate_position(osc, bath, DriveConfig{}, 0.0, 2.0 * osc.omega_m(), t, 1.0 / (1e3 * 15.0), 4),
                  ValidationError);
}

TEST_CASE("position + lock-in: parametric gain on both branches") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e3, 1e3);
  const double dt = 1.0 / (1e3 * 32.0);
  const double t = 40.0 / osc.gamma_m();
  LockinOptions lo;
  lo.bandwidth_hz = 20.0;
  const double ref = analytic::steady_state_amplitude(1e-12, osc, 0.0);
  struct Case { ParametricPhase phase; double gs; double gain; };
  for (Case c : {Case{ParametricPhase::deamplify, 0.0, 1.0}, Case{ParametricPhase::deamplify, 0.5, 1.0 / 1.5},
                 Case{ParametricPhase::amplify, 0.5, 2.0}}) {
    DriveConfig d;
    d.f0 = 1e-12;
    d.phase = c.phase;
    d.gs = c.gs;
    const auto pos = simulate_position(osc, ThermalBath{0.0}, d, kp_from_gs(c.gs, osc), 2.0 * osc.omega_m(), t, dt, 1);
    const auto q = lockin_demodulate(pos, osc.omega_m(), lo);
    CHECK(q.x1.back() / ref == doctest::Approx(c.gain).epsilon(0.02));
    CHECK(std::abs(q.x2.back()) < 0.02 * ref);
  }
}

TEST_CASE("position: ideal feedback damps the phase quadrature") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e3, 1e3);
  const double dt = 1.0 / (1e3 * 32.0);
  PositionOptions opt;
  opt.gfb = 2.0;
  opt.x_initial = 1e-9;  // all in X2 at theta = 0
  const double t = 1.0 / osc.gamma_m();
  const auto pos = simulate_position(osc, ThermalBath{0.0}, DriveConfig{}, 0.0, 2.0 * osc.omega_m(), t, dt, 1, opt);
  // X2 decays at Gamma_2 / 2 = 1.5 Gamma_m: envelope e^{-1.5}.
  double peak = 0.0;
  for (std::size_t i = pos.size() - 40; i < pos.size(); ++i) peak = std::max(peak, std::abs(pos.x[i]));
  CHECK(peak / 1e-9 == doctest::Approx(std::exp(-1.5)).epsilon(0.02));
}

TEST_CASE("lock-in: filter response and validation") {
  LockinOptions lo;
  lo.bandwidth_hz = 100.0;
  LockIn li(1e-5, lo);
  CHECK(li.power_response(0.0) == doctest::Approx(1.0));
  CHECK(li.power_response(100.0) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(li.decimation() == 125);
  lo.sample_rate_hz = 150.0;
  CHECK_THROWS_AS(LockIn(1e-5, lo), ValidationError);

  PositionTrace tr;
  tr.dt = 1e-5;
  tr.x.assign(1000, 0.0);
  LockinOptions wide;
  wide.bandwidth_hz = 2e3;
  CHECK_THROWS_AS(lockin_demodulate(tr, two_pi * 1e4, wide), ValidationError);
}

TEST_CASE("lock-in: recovers quadratures of a pure tone") {
  PositionTrace tr;
  tr.dt = 1.0 / 320e3;
  const double w = two_pi * 1e4;
  for (int i = 0; i < 320000; ++i) {
    const double th = w * i * tr.dt;
    tr.x.push_back(3.0 * std::sin(th) - 2.0 * std::cos(th));
  }
  LockinOptions lo;
  lo.bandwidth_hz = 100.0;
  const auto q = lockin_demodulate(tr, w, lo);
  CHECK(q.x1.back() == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(q.x2.back() == doctest::Approx(-2.0).epsilon(1e-3));
  CHECK(q.dt == doctest::Approx(1.0 / 800.0));
}

TEST_CASE("pll: calibration and acquisition") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e3, 1e3);
  const auto pll = pll_for_feedback(2.0, osc, 5.0, 0.5);
  CHECK(pll_feedback_rate(pll) / osc.gamma_m() == doctest::Approx(2.0));

  DriveConfig d;
  d.f0 = 1e-12;
  PllOptions opt;
  opt.lockin.bandwidth_hz = 20.0;
  opt.initial_detuning_hz = 0.2;
  opt.acquisition_time = 10.0 / osc.gamma_m();
  const auto res = run_pll(osc, ThermalBath{0.0}, d, 0.0, pll, 60.0 / osc.gamma_m(), 1.0 / 32e3, 1, opt);
  CHECK_FALSE(res.lock_lost);
  CHECK_FALSE(res.quadratures.divergent);
  CHECK(res.frequency_hz.back() == doctest::Approx(1e3).epsilon(1e-5));
  CHECK(res.quadratures.x1.back() > 0.0);
  CHECK(std::abs(res.quadratures.x2.back()) < 0.01 * res.quadratures.x1.back());
}

TEST_CASE("trace export: csv and binary round trip") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const auto tr = simulate_rotating(osc, ThermalBath{300}, 0.0, 0.0, std::nullopt, 0.01, 1e-6, 9);
  std::stringstream bin;
  write_trace_binary(bin, tr);
  const auto back = read_trace_binary(bin);
  CHECK(back.dt == tr.dt);
  CHECK(back.seed == 9);
  REQUIRE(back.channels.size() == 2);
  CHECK(back.channels[0] == tr.x1);
  CHECK(back.channels[1] == tr.x2);

  std::stringstream bad("NOTATRACE-------------------------------");
  CHECK_THROWS_AS(read_trace_binary(bad), ValidationError);

  std::ostringstream csv;
  write_trace_csv(csv, tr);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t_s,x1_m,x2_m");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == tr.size());
}
