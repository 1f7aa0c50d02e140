#include <algorithm>
#include <cmath>
#include <string>

#include "levmar.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/spectral.hpp"

namespace squeezesim::spectral {

ThresholdFit fit_threshold(std::span<const double> vp, std::span<const double> y, ThresholdModel model,
                           std::span<const double> sigmas) {
  const std::size_t n = vp.size();
  if (y.size() != n) throw ValidationError("fit_threshold: voltage and value counts differ");
  if (n < 5) throw ValidationError("fit_threshold: insufficient data (" + std::to_string(n) + " points, need >= 5)");
  if (!sigmas.empty() && sigmas.size() != n) throw ValidationError("fit_threshold: sigma count differs");
  double vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(vp[i] >= 0.0) || !std::isfinite(vp[i])) throw ValidationError("fit_threshold: voltages must be finite and >= 0");
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) throw ValidationError("fit_threshold: values must be finite and > 0");
    if (!sigmas.empty() && !(sigmas[i] > 0.0)) throw ValidationError("fit_threshold: sigmas must be > 0");
    vmax = std::max(vmax, vp[i]);
  }
  if (!(vmax > 0.0)) throw ValidationError("fit_threshold: need at least one non-zero voltage");

  // Fit u = V_max / V_th (dimensionless) and, for gains, the scale a.
  const bool has_scale = model != ThresholdModel::variance;
  const double sign = model == ThresholdModel::gain_amp ? -1.0 : 1.0;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = vp[i] / vmax;

  // Start from the linearised form 1/y = (1 + sign u v) / a.
  double u0 = 0.0;
  double a0 = 1.0;
  if (!has_scale) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num += v[i] * (1.0 / y[i] - 1.0);
      den += v[i] * v[i];
    }
    u0 = num / den;
  } else {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 1.0 / y[i];
      sx += v[i];
      sy += t;
      sxx += v[i] * v[i];
      sxy += v[i] * t;
    }
    const double dn = static_cast<double>(n);
    const double det = dn * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) throw ValidationError("fit_threshold: voltages must not all coincide");
    const double c1 = (dn * sxy - sx * sy) / det;
    const double c0 = (sy - c1 * sx) / dn;
    if (c0 > 0.0) {
      a0 = 1.0 / c0;
      u0 = sign * c1 / c0;
    }
  }
  if (!(u0 > 0.0) || !std::isfinite(u0)) u0 = 0.5;
  if (model == ThresholdModel::gain_amp && u0 >= 1.0) u0 = 0.99;

  const Eigen::Index np = has_scale ? 2 : 1;
  const detail::ResidualFn residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double u = p[0];
    const double a = has_scale ? p[1] : 1.0;
    r.resize(static_cast<Eigen::Index>(n));
    jac.resize(static_cast<Eigen::Index>(n), np);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double w = sigmas.empty() ? 1.0 : 1.0 / sigmas[i];
      const double d = 1.0 + sign * u * v[i];
      const double m = a / d;
      r[row] = (y[i] - m) * w;
      jac(row, 0) = -a * sign * v[i] / (d * d) * w;
      if (has_scale) jac(row, 1) = w / d;
    }
  };
  const detail::FeasibleFn feasible = [&](const Eigen::VectorXd& p) {
    if (!(p[0] > 0.0) || !std::isfinite(p[0])) return false;
    if (model == ThresholdModel::gain_amp && !(p[0] < 1.0)) return false;  // every V_p below V_th
    return !has_scale || (p[1] > 0.0 && std::isfinite(p[1]));
  };

  Eigen::VectorXd p(np);
  p[0] = u0;
  if (has_scale) p[1] = a0;
  detail::LevMarOptions lm;
  lm.max_iterations = 500;
  const auto res = detail::levenberg_marquardt(residuals, p, feasible, lm);
  if (!res.converged) throw NumericalError("fit_threshold did not converge");

  const double dof = static_cast<double>(n) - static_cast<double>(np);
  const double chi2_red = res.chi2 / dof;
  const double cov_scale = sigmas.empty() ? chi2_red : 1.0;

  ThresholdFit out;
  const double u = res.params[0];
  const double su = std::sqrt(std::max(0.0, res.jtj_inverse(0, 0) * cov_scale));
  out.vth = vmax / u;
  out.uncertainty = vmax * su / (u * u);
  if (has_scale) {
    out.scale = res.params[1];
    out.scale_uncertainty = std::sqrt(std::max(0.0, res.jtj_inverse(1, 1) * cov_scale));
  }
  out.chi2_reduced = chi2_red;
  out.iterations = res.iterations;
  return out;
}

}  // namespace squeezesim::spectral
