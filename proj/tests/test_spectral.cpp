#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "squeezesim/errors.hpp"
#include "squeezesim/simulate.hpp"
#include "squeezesim/spectral.hpp"
#include "support.hpp"

using namespace squeezesim;
using namespace squeezesim::spectral;

namespace {
constexpr double two_pi = 6.283185307179586;

std::vector<double> white(std::size_t n, double sd, std::uint64_t seed) {
  testing::Gen gen(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sd * gen.normal();
  return x;
}

// Single-sided Lorentzian written out independently: peak plus mirror image.
double one_sided_lorentzian(double f, double area, double gamma, double center, double floor) {
  const double h = 0.5 * gamma;
  auto l = [&](double d) { return area / M_PI * h / (d * d + h * h); };
  return floor + l(f - center) + l(f + center);
}

// Averaged-periodogram scatter: each bin is the true value times a
// Gamma(K, 1/K) variate.
Spectrum synthetic_lorentzian(double area, double gamma, double center, double floor, double df,
                              std::size_t bins, int k, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::gamma_distribution<double> g(k, 1.0 / k);
  Spectrum s;
  s.df = df;
  s.n_averages = k;
  s.window = Window::hann;
  s.values.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) s.values[i] = one_sided_lorentzian(i * df, area, gamma, center, floor) * g(eng);
  return s;
}
}  // namespace

TEST_CASE("welch: rectangular, non-overlapping spectrum closes Parseval exactly") {
  const auto x = white(1 << 14, 2.0, 1);
  const std::size_t seg = 1024;
  const auto s = welch_psd(x, 1e-3, seg, 0.0, Window::rectangular);
  CHECK(s.n_averages == 16);
  CHECK(s.size() == seg / 2 + 1);
  CHECK(s.df == doctest::Approx(1.0 / (seg * 1e-3)));
  // Mean of per-segment (mean-removed, 1/N) variances.
  double expect = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    std::vector<double> part(x.begin() + k * seg, x.begin() + (k + 1) * seg);
    expect += testing::variance(part) * (seg - 1.0) / seg;
  }
  CHECK(s.integrated_power() == doctest::Approx(expect / 16.0).epsilon(1e-10));
}

TEST_CASE("welch: Hann spectrum of white noise has level 2 sigma^2 dt") {
  const double dt = 1e-4;
  const auto x = white(1 << 18, 0.5, 2);
  const auto s = welch_psd(x, dt, 2048);
  CHECK(s.n_averages == 255);
  double mean = 0.0;
  for (std::size_t k = 2; k + 1 < s.size(); ++k) mean += s.values[k];
  mean /= s.size() - 3;
  CHECK(mean == doctest::Approx(2.0 * 0.25 * dt).epsilon(0.01));
  CHECK(s.integrated_power() == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("welch: a tone's power lands in its bin") {
  const double dt = 1e-3;
  const std::size_t n = 1 << 15, seg = 1024;
  std::vector<double> x(n);
  const double f = 64.0 / (seg * dt);
  for (std::size_t i = 0; i < n; ++i) x[i] = 3.0 * std::sin(two_pi * f * i * dt);
  const auto s = welch_psd(x, dt, seg);
  double band = 0.0;
  for (std::size_t k = 60; k <= 68; ++k) band += s.values[k] * s.df;
  CHECK(band == doctest::Approx(4.5).epsilon(1e-6));
  CHECK_THROWS_AS(welch_psd(x, dt, n * 2), ValidationError);
  CHECK_THROWS_AS(welch_psd(x, 0.0, seg), ValidationError);
  CHECK_THROWS_AS(welch_psd(x, dt, seg, 1.0), ValidationError);
}

TEST_CASE("property: segment sizing gives power-of-two segments and enough averages") {
  testing::Gen gen(4);
  for (int i = 0; i < 200; ++i) {
    const double dt = gen.log_uniform(1e-7, 1e-2);
    const double gamma = gen.log_uniform(1e-3, 1e-1) / dt;
    const std::size_t n = static_cast<std::size_t>(gen.log_uniform(1e5, 1e7));
    const std::size_t seg = segment_length_for(gamma, dt, n);
    CHECK((seg & (seg - 1)) == 0);
    CHECK(seg >= 16);
    CHECK(2 * n / seg >= 16);
  }
}

TEST_CASE("lorentzian model integrates to its area on the half line") {
  for (double c : {0.0, 3.0, 50.0}) {
    double acc = 0.0;
    const double h = 1e-3;
    for (int i = 0; i < 2000000; ++i) acc += lorentzian((i + 0.5) * h, 2.0, 1.5, c, 0.0) * h;
    // Tail beyond 2000 Hz: 2 (area/pi)(gamma/2)/f.
    acc += 2.0 * 2.0 / M_PI * 0.75 / 2000.0;
    CHECK(acc == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(lorentzian(c + 0.75, 2.0, 1.5, c, 0.0) == doctest::Approx(one_sided_lorentzian(c + 0.75, 2.0, 1.5, c, 0.0)));
  }
}

TEST_CASE("lorentzian fit recovers synthetic parameters") {
  const double area = 2e-24, gamma = 10.0, center = 100.0, floor = 1e-28;
  const auto s = synthetic_lorentzian(area, gamma, center, floor, 0.25, 2000, 64, 8);
  const auto fit = lorentzian_fit(s);
  CHECK(std::abs(fit.area - area) < 4 * fit.sigma(0));
  CHECK(std::abs(fit.gamma - gamma) < 4 * fit.sigma(1));
  CHECK(std::abs(fit.center - center) < 4 * fit.sigma(2));
  CHECK(fit.sigma(0) < 0.03 * area);
  CHECK(fit.chi2_reduced == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("property: lorentzian fit is equivariant under shift and rescaling") {
  testing::Gen gen(12);
  for (int i = 0; i < 20; ++i) {
    const double gamma = gen.uniform(5.0, 20.0);
    // Far from 0 Hz so the mirror image is negligible against the floor.
    const double center = gen.uniform(700.0, 900.0);
    const auto base = synthetic_lorentzian(1.0, gamma, center, 1e-2, 0.5, 3200, 32, 100 + i);

    // Prepend whole bins and mask them, so both fits see the same samples.
    const std::size_t shift = static_cast<std::size_t>(gen.integer(10, 200));
    LorentzianFitOptions o0;
    o0.exclude_halfwidth = 1.5 * base.df;
    const auto f0 = lorentzian_fit(base, o0);
    Spectrum moved = base;
    moved.values.insert(moved.values.begin(), shift, 1e3);
    LorentzianFitOptions o1;
    o1.exclude_halfwidth = (shift + 1.5) * base.df;
    const auto f1 = lorentzian_fit(moved, o1);
    // Exact up to the mirror term at -center, which moves with the shift.
    CHECK(f1.center - f0.center == doctest::Approx(shift * base.df).epsilon(2e-3));
    CHECK(f1.gamma == doctest::Approx(f0.gamma).epsilon(2e-3));
    CHECK(f1.area == doctest::Approx(f0.area).epsilon(2e-3));

    const double scale = gen.log_uniform(1e-30, 1e10);
    Spectrum scaled = base;
    for (auto& v : scaled.values) v *= scale;
    const auto f2 = lorentzian_fit(scaled, o0);
    CHECK(f2.area == doctest::Approx(scale * f0.area).epsilon(1e-6));
    CHECK(f2.floor == doctest::Approx(scale * f0.floor).epsilon(1e-6));
    CHECK(f2.gamma == doctest::Approx(f0.gamma).epsilon(1e-6));
  }
}

TEST_CASE("lorentzian fit with exclusion and a fixed center") {
  // Folded peak at 0 Hz plus a coherent spike at DC that must be ignored.
  auto s = synthetic_lorentzian(1.0, 4.0, 0.0, 0.0, 0.1, 3000, 64, 3);
  s.values[0] = s.values[1] = 1e6;
  LorentzianFitOptions opt;
  opt.fit_center = false;
  opt.exclude_halfwidth = 0.15;
  const auto fit = lorentzian_fit(s, opt);
  CHECK(fit.center == 0.0);
  CHECK(fit.exclude_halfwidth == 0.15);
  // The folded peak still integrates to the variance.
  CHECK(fit.area == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.gamma == doctest::Approx(4.0).epsilon(0.05));

  std::ostringstream json;
  write_fit_json(json, fit);
  CHECK(json.str().find("\"halfwidth_hz\": 0.15") != std::string::npos);
  std::ostringstream csv;
  write_spectrum_csv(csv, s);
  CHECK(csv.str().rfind("f_hz,psd_m2_per_hz\n", 0) == 0);
}

TEST_CASE("lorentzian fit rejects flat and under-resolved spectra") {
  std::mt19937_64 eng(1);
  std::gamma_distribution<double> g(32, 1.0 / 32);
  Spectrum flat;
  flat.df = 1.0;
  flat.n_averages = 32;
  for (int i = 0; i < 500; ++i) flat.values.push_back(g(eng));
  CHECK_THROWS_AS(lorentzian_fit(flat), NumericalError);

  const auto narrow = synthetic_lorentzian(1.0, 0.5, 100.0, 1e-3, 1.0, 500, 32, 2);
  CHECK_THROWS_AS(lorentzian_fit(narrow), ValidationError);
}

TEST_CASE("simulated quadrature spectrum: fitted area and width match the process") {
  const auto osc = OscillatorParams::from_q(1e-12, two_pi * 1e5, 1e4);
  const ThermalBath bath{300.0};
  const double gs = 2.0, gfb = 4.0;
  const auto [g1, g2] = simulate::quadrature_rates(osc, gs, gfb);
  const auto tr = simulate::simulate_rotating(osc, bath, gs, gfb, std::nullopt, 5000.0 / g1,
                                              simulate::max_rotating_step(osc, gs, gfb), 21);
  const double fwhm = g1 / two_pi;
  const auto s = welch_psd(tr.steady_x1(), tr.dt, segment_length_for(fwhm, tr.dt, tr.steady_x1().size()));
  LorentzianFitOptions opt;
  opt.fit_center = false;
  opt.max_frequency = 20.0 * fwhm;
  const auto fit = lorentzian_fit(s, opt);
  const double var = classical_sigma0_sq(osc, bath) / (1.0 + gs);
  CHECK(fit.area == doctest::Approx(var).epsilon(0.06));
  CHECK(fit.gamma == doctest::Approx(fwhm).epsilon(0.05));
}

TEST_CASE("threshold fit inverts noiseless models exactly") {
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) v.push_back(0.01 * i);
  const double vth = 0.148;
  std::vector<double> yv, yd, ya;
  std::vector<double> va;
  for (double x : v) {
    yv.push_back(1.0 / (1.0 + x / vth));
    yd.push_back(2.5 / (1.0 + x / vth));
  }
  for (int i = 0; i < 10; ++i) {
    va.push_back(0.013 * i);
    ya.push_back(0.7 / (1.0 - va.back() / vth));
  }
  CHECK(fit_threshold(v, yv, ThresholdModel::variance).vth == doctest::Approx(vth).epsilon(1e-9));
  const auto d = fit_threshold(v, yd, ThresholdModel::gain_deamp);
  CHECK(d.vth == doctest::Approx(vth).epsilon(1e-9));
  CHECK(d.scale == doctest::Approx(2.5).epsilon(1e-9));
  const auto a = fit_threshold(va, ya, ThresholdModel::gain_amp);
  CHECK(a.vth == doctest::Approx(vth).epsilon(1e-9));
  CHECK(a.scale == doctest::Approx(0.7).epsilon(1e-9));

  CHECK_THROWS_AS(fit_threshold(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 0.9},
                                ThresholdModel::variance),
                  ValidationError);
  CHECK_THROWS_AS(fit_threshold(std::vector<double>(6, 0.0), std::vector<double>(6, 1.0), ThresholdModel::variance),
                  ValidationError);
}

TEST_CASE("property: threshold fit is unbiased within one sigma over Monte Carlo") {
  testing::Gen gen(99);
  const double vth = 0.148;
  std::vector<double> v, sig;
  for (int i = 0; i < 10; ++i) v.push_back(10.0 * i / 9.0);
  std::vector<double> est, reported;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> y;
    sig.clear();
    for (double x : v) {
      const double truth = 1.0 / (1.0 + x / vth);
      sig.push_back(0.01 * truth);
      y.push_back(truth * (1.0 + 0.01 * gen.normal()));
    }
    const auto fit = fit_threshold(v, y, ThresholdModel::variance, sig);
    est.push_back(fit.vth);
    reported.push_back(fit.uncertainty);
  }
  const double sd = std::sqrt(testing::variance(est));
  CHECK(std::abs(testing::mean(est) - vth) < sd);
  // Reported uncertainty reflects the actual scatter.
  CHECK(testing::mean(reported) == doctest::Approx(sd).epsilon(0.2));
}

TEST_CASE("allan deviation: constant, drift, white noise") {
  const double rate = 100.0, f0 = 1e6;
  const std::vector<double> taus{0.01, 0.1, 1.0, 10.0};
  const std::vector<double> flat(100000, f0);
  for (double d : allan_deviation(flat, f0, taus, rate)) CHECK(d == 0.0);

  std::vector<double> doubled(flat);
  doubled.insert(doubled.end(), flat.begin(), flat.end());
  for (double d : allan_deviation(doubled, f0, taus, rate)) CHECK(d == 0.0);

  const double r = 0.5;  // Hz/s
  std::vector<double> ramp(100000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = f0 + r * i / rate;
  const auto dr = allan_deviation(ramp, f0, taus, rate);
  for (std::size_t i = 0; i < taus.size(); ++i) CHECK(dr[i] == doctest::Approx(r * taus[i] / (std::sqrt(2.0) * f0)).epsilon(1e-6));
  CHECK(loglog_slope(taus, dr) == doctest::Approx(1.0).epsilon(1e-6));

  auto noise = white(1000000, 1.0, 5);
  for (double& v : noise) v += f0;
  const std::vector<double> t2{0.01, 0.1, 1.0, 10.0, 100.0};
  CHECK(loglog_slope(t2, allan_deviation(noise, f0, t2, rate)) == doctest::Approx(-0.5).epsilon(0.1));

  CHECK_THROWS_AS(allan_deviation(flat, f0, std::vector<double>{0.015}, rate), ValidationError);
  CHECK_THROWS_AS(allan_deviation(flat, f0, std::vector<double>{400.0}, rate), ValidationError);
  CHECK_THROWS_AS(allan_deviation(flat, 0.0, taus, rate), ValidationError);
}
