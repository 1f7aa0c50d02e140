#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "../numfmt.hpp"
#include "json.hpp"
#include "levmar.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/model.hpp"
#include "squeezesim/spectral.hpp"

namespace squeezesim::spectral {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct Guess {
  double area, gamma, center, floor;
  double peak;         // smoothed maximum
  double floor_sigma;  // scatter of the far bins
};

Guess initial_guess(const std::vector<double>& f, const std::vector<double>& y, int n_avg) {
  const std::size_t n = f.size();
  // Peak from a 5-bin running mean so a single noisy bin cannot fake one.
  std::size_t imax = 0;
  double smax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(n, i + 3);
    double s = 0.0;
    for (std::size_t j = lo; j < hi; ++j) s += y[j];
    s /= static_cast<double>(hi - lo);
    if (s > smax) {
      smax = s;
      imax = i;
    }
  }
  Guess g{};
  g.center = f[imax];
  g.peak = smax;

  // Floor: median of the quarter of bins farthest from the peak.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(f[a] - g.center) > std::abs(f[b] - g.center);
  });
  const std::size_t nq = std::max<std::size_t>(1, n / 4);
  std::vector<double> far;
  for (std::size_t i = 0; i < nq; ++i) far.push_back(y[order[i]]);
  g.floor = median(far);
  std::vector<double> dev;
  for (double v : far) dev.push_back(std::abs(v - g.floor));
  g.floor_sigma = std::max(1.4826 * median(dev), g.floor / std::sqrt(std::max(1, n_avg)) / std::sqrt(5.0));

  // Width at half of (max - floor).
  const double half = g.floor + 0.5 * (smax - g.floor);
  std::size_t r = imax;
  while (r + 1 < n && y[r] > half) ++r;
  std::size_t l = imax;
  while (l > 0 && y[l] > half) --l;
  const double df = n > 1 ? (f[n - 1] - f[0]) / static_cast<double>(n - 1) : 1.0;
  const bool left_crossed = y[l] <= half && l < imax;
  g.gamma = left_crossed ? f[r] - f[l] : 2.0 * (f[r] - g.center);
  g.gamma = std::max(g.gamma, df);

  // Area: trapezoid of (y - floor), or the peak height if that fails. A peak
  // folded at 0 Hz is twice as tall for the same area.
  double integral = 0.0;
  for (std::size_t i = 1; i < n; ++i)
    integral += 0.5 * (y[i] + y[i - 1] - 2.0 * g.floor) * (f[i] - f[i - 1]);
  g.area = integral;
  if (!(g.area > 0.0) || !std::isfinite(g.area)) {
    const bool folded = g.center - f[0] < 0.5 * g.gamma;
    g.area = (smax - g.floor) * constants::pi * g.gamma / (folded ? 4.0 : 2.0);
  }
  return g;
}

}  // namespace

double lorentzian(double f, double area, double gamma, double center, double floor) {
  const double hw = 0.5 * gamma;
  const double d1 = f - center;
  const double d2 = f + center;
  return floor + (area / constants::pi) * (hw / (d1 * d1 + hw * hw) + hw / (d2 * d2 + hw * hw));
}

double LorentzianFit::sigma(std::size_t i) const {
  return std::sqrt(std::max(0.0, covariance.at(i).at(i)));
}

LorentzianFit lorentzian_fit(const Spectrum& spectrum, const LorentzianFitOptions& options) {
  if (!(spectrum.df > 0.0) || spectrum.values.empty()) throw ValidationError("empty spectrum");
  if (!(options.exclude_halfwidth >= 0.0)) throw ValidationError("exclusion half-width must be >= 0");

  // The lowest bins carry the per-segment mean removal; drop the window's main lobe around DC.
  const std::size_t first = spectrum.window == Window::hann ? 2 : 1;
  std::vector<double> f;
  std::vector<double> y;
  for (std::size_t k = first; k < spectrum.size(); ++k) {
    const double fk = spectrum.frequency(k);
    if (fk > options.max_frequency) break;
    if (std::abs(fk - options.exclude_center) < options.exclude_halfwidth) continue;
    if (!std::isfinite(spectrum.values[k])) throw ValidationError("non-finite spectrum value");
    f.push_back(fk);
    y.push_back(spectrum.values[k]);
  }
  if (f.size() < 8) throw ValidationError("too few spectrum bins outside the exclusion window");

  Guess g = initial_guess(f, y, spectrum.n_averages);
  if (!options.fit_center) g.center = options.exclude_center;
  if (!(g.peak - g.floor > 3.0 * g.floor_sigma) || !(g.peak > g.floor))
    throw NumericalError("degenerate spectrum: no peak above the floor at 3 sigma");
  std::size_t near = 0;
  for (double fk : f)
    if (std::abs(fk - g.center) < 10.0 * g.gamma) ++near;
  if (near < 20) {
    throw ValidationError("spectrum under-resolved: " + std::to_string(near) +
                          " usable bins within 10 linewidths, need >= 20");
  }

  // Work in units of the peak height and the initial width.
  const double ys = g.peak;
  const double fs = g.gamma;
  const std::size_t n = f.size();
  std::vector<double> fn(n), yn(n);
  for (std::size_t i = 0; i < n; ++i) {
    fn[i] = f[i] / fs;
    yn[i] = y[i] / ys;
  }
  const bool free_c = options.fit_center;
  const Eigen::Index np = free_c ? 4 : 3;
  const double c_fixed = g.center / fs;

  auto unpack = [&](const Eigen::VectorXd& p, double& a, double& gam, double& c, double& fl) {
    a = p[0];
    gam = p[1];
    c = free_c ? p[2] : c_fixed;
    fl = p[np - 1];
  };

  std::vector<double> sig(n, 1.0);
  const double sqrt_k = std::sqrt(std::max(1, spectrum.n_averages));
  auto set_weights = [&](const Eigen::VectorXd& p) {
    if (options.weighting == LorentzianFitOptions::Weighting::uniform) return;
    double a, gam, c, fl;
    unpack(p, a, gam, c, fl);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = lorentzian(fn[i], a, gam, c, fl);
      sig[i] = std::max(std::abs(m), 1e-12) / sqrt_k;
    }
  };

  const detail::ResidualFn residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    double a, gam, c, fl;
    unpack(p, a, gam, c, fl);
    r.resize(static_cast<Eigen::Index>(n));
    jac.resize(static_cast<Eigen::Index>(n), np);
    const double hw = 0.5 * gam;
    for (std::size_t i = 0; i < n; ++i) {
      const double d1 = fn[i] - c;
      const double d2 = fn[i] + c;
      const double den1 = d1 * d1 + hw * hw;
      const double den2 = d2 * d2 + hw * hw;
      const double shape = (hw / den1 + hw / den2) / constants::pi;
      const double model = fl + a * shape;
      const double w = 1.0 / sig[i];
      const auto row = static_cast<Eigen::Index>(i);
      r[row] = (yn[i] - model) * w;
      jac(row, 0) = shape * w;
      // d/dgamma with hw = gamma / 2
      jac(row, 1) = (a / (2.0 * constants::pi)) *
                    ((d1 * d1 - hw * hw) / (den1 * den1) + (d2 * d2 - hw * hw) / (den2 * den2)) * w;
      if (free_c) jac(row, 2) = (a / constants::pi) * hw * 2.0 * (d1 / (den1 * den1) - d2 / (den2 * den2)) * w;
      jac(row, np - 1) = w;
    }
  };
  const detail::FeasibleFn feasible = [&](const Eigen::VectorXd& p) {
    return p[0] > 0.0 && p[1] > 0.0 && std::isfinite(p[0]) && std::isfinite(p[1]);
  };

  Eigen::VectorXd p(np);
  p[0] = g.area / (ys * fs);
  p[1] = 1.0;
  if (free_c) p[2] = c_fixed;
  p[np - 1] = g.floor / ys;

  detail::LevMarOptions lm;
  lm.max_iterations = options.max_iterations;
  lm.rel_tol = 1e-12;
  detail::LevMarResult res;
  const int passes = options.weighting == LorentzianFitOptions::Weighting::uniform ? 1 : 1 + std::max(0, options.reweight_passes);
  int total_iterations = 0;
  for (int pass = 0; pass < passes; ++pass) {
    set_weights(p);
    res = detail::levenberg_marquardt(residuals, p, feasible, lm);
    total_iterations += res.iterations;
    if (!res.converged) {
      throw NumericalError("Lorentzian fit did not converge in " + std::to_string(options.max_iterations) +
                           " iterations");
    }
    p = res.params;
  }

  const double dof = static_cast<double>(n) - static_cast<double>(np);
  const double chi2_red = dof > 0.0 ? res.chi2 / dof : 0.0;

  LorentzianFit fit;
  double a, gam, c, fl;
  unpack(p, a, gam, c, fl);
  near = 0;
  for (double fk : fn)
    if (std::abs(fk - c) < 10.0 * gam) ++near;
  if (near < 20) {
    throw ValidationError("spectrum under-resolved: fitted width spans " + std::to_string(near) +
                          " bins within 10 linewidths, need >= 20");
  }
  fit.area = a * ys * fs;
  fit.gamma = gam * fs;
  fit.center = c * fs;
  fit.floor = fl * ys;
  fit.exclude_center = options.exclude_center;
  fit.exclude_halfwidth = options.exclude_halfwidth;
  fit.chi2_reduced = chi2_red;
  fit.n_bins = n;
  fit.iterations = total_iterations;

  // Map the reduced parameter set back onto (area, gamma, center, floor).
  const std::array<double, 4> unit = {ys * fs, fs, fs, ys};
  std::array<int, 4> slot = {0, 1, free_c ? 2 : -1, static_cast<int>(np - 1)};
  const double scale = chi2_red > 0.0 ? chi2_red : 1.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      fit.covariance[i][j] = (slot[i] < 0 || slot[j] < 0)
                                 ? 0.0
                                 : res.jtj_inverse(slot[i], slot[j]) * scale * unit[i] * unit[j];
    }
  }
  return fit;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum) {
  using squeezesim::detail::num;
  os << "f_hz,psd_m2_per_hz\n";
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    os << num(spectrum.frequency(k)) << ',' << num(spectrum.values[k]) << '\n';
}

void write_fit_json(std::ostream& os, const LorentzianFit& fit) {
  nlohmann::ordered_json j;
  j["area_m2"] = fit.area;
  j["area_sigma_m2"] = fit.sigma(0);
  j["gamma_hz"] = fit.gamma;
  j["gamma_sigma_hz"] = fit.sigma(1);
  j["center_hz"] = fit.center;
  j["center_sigma_hz"] = fit.sigma(2);
  j["floor_m2_per_hz"] = fit.floor;
  j["floor_sigma_m2_per_hz"] = fit.sigma(3);
  j["parameter_order"] = {"area", "gamma", "center", "floor"};
  nlohmann::ordered_json cov = nlohmann::ordered_json::array();
  for (const auto& row : fit.covariance) cov.push_back(row);
  j["covariance"] = cov;
  j["exclusion"] = {{"center_hz", fit.exclude_center}, {"halfwidth_hz", fit.exclude_halfwidth}};
  j["chi2_reduced"] = fit.chi2_reduced;
  j["n_bins"] = fit.n_bins;
  j["iterations"] = fit.iterations;
  os << j.dump(2) << '\n';
}

}  // namespace squeezesim::spectral
