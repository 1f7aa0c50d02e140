#include "squeezesim/capdesign.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "numfmt.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/parallel.hpp"

namespace squeezesim::capdesign {

namespace {

double gap(double x, const CapacitorGeometry& geom) {
  const double g = geom.d0 - x;
  if (!(g > 0.0)) throw GeometryError("capacitor gap closed (x >= d0)");
  return g;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void CapacitorGeometry::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("capacitor.alpha must be > 0");
  if (!(c0 >= 0.0)) throw ValidationError("capacitor.c0 must be >= 0");
  if (!(d0 > 0.0)) throw ValidationError("capacitor.d0 must be > 0");
  if (!(vdc >= 0.0)) throw ValidationError("capacitor.vdc must be >= 0");
  if (!(vp >= 0.0)) throw ValidationError("capacitor.vp must be >= 0");
}

double capacitance(double x, const CapacitorGeometry& geom) {
  return geom.c0 + geom.alpha / gap(x, geom);
}

double capacitance_slope(double x, const CapacitorGeometry& geom) {
  const double g = gap(x, geom);
  return geom.alpha / (g * g);
}

double capacitance_curvature(double x, const CapacitorGeometry& geom) {
  const double g = gap(x, geom);
  return 2.0 * geom.alpha / (g * g * g);
}

double parametric_stiffness(const CapacitorGeometry& geom, double x_eq) {
  return std::abs(capacitance_curvature(x_eq, geom)) * geom.vdc * geom.vp;
}

double threshold_voltage(const OscillatorParams& osc, const CapacitorGeometry& geom, double x_eq) {
  if (!(geom.vdc > 0.0)) throw ValidationError("threshold voltage undefined for V_DC = 0");
  const double curv = std::abs(capacitance_curvature(x_eq, geom));
  return 2.0 * osc.stiffness() / (osc.q() * geom.vdc * curv);
}

double frequency_tuning_capacitive(double vdc, const OscillatorParams& osc,
                                   const CapacitorGeometry& geom, double x_eq) {
  const double curv = std::abs(capacitance_curvature(x_eq, geom));
  const double radicand = 1.0 - curv * vdc * vdc / (2.0 * osc.stiffness());
  if (!(radicand > 0.0)) throw SofteningError("electrostatic softening exceeds mechanical stiffness");
  return osc.omega_m() * std::sqrt(radicand);
}

double softening_collapse_voltage(const OscillatorParams& osc, const CapacitorGeometry& geom,
                                  double x_eq) {
  return std::sqrt(2.0 * osc.stiffness() / std::abs(capacitance_curvature(x_eq, geom)));
}

double pull_in_voltage(const OscillatorParams& osc, const CapacitorGeometry& geom) {
  return std::sqrt(8.0 * osc.stiffness() * std::pow(geom.d0, 3) / (27.0 * geom.alpha));
}

double static_equilibrium(const OscillatorParams& osc, const CapacitorGeometry& geom, double vdc) {
  if (!(vdc >= 0.0)) throw ValidationError("vdc must be >= 0");
  if (vdc == 0.0) return 0.0;

  const double k = osc.stiffness();
  const double v2 = vdc * vdc;
  // Net restoring force; its zero in [0, d0/3] is the stable branch.
  auto residual = [&](double x) { return k * x - 0.5 * capacitance_slope(x, geom) * v2; };
  auto slope = [&](double x) { return k - 0.5 * capacitance_curvature(x, geom) * v2; };

  double lo = 0.0;
  double hi = geom.d0 / 3.0;
  if (residual(hi) < 0.0) throw PullInError("pull-in: no stable equilibrium at this bias");

  double x = 0.5 * geom.alpha * v2 / (k * geom.d0 * geom.d0);  // small-deflection estimate
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  const double tol = 1e-15 * geom.d0;
  for (int it = 0; it < 200; ++it) {
    const double r = residual(x);
    if (r == 0.0) break;
    if (r < 0.0) lo = x; else hi = x;
    const double d = slope(x);
    double next = d > 0.0 ? x - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - x) <= tol || hi - lo <= tol;
    x = next;
    if (done) break;
  }

  if (!(slope(x) > 0.0)) throw PullInError("pull-in: equilibrium is not a potential minimum");
  return x;
}

double frequency_tuning_piezo(double vdc, const PiezoTuning& tuning, const OscillatorParams& osc) {
  return osc.omega_m() + constants::two_pi * tuning.slope_hz_per_v * vdc;
}

std::string_view to_string(CellFlag flag) {
  switch (flag) {
    case CellFlag::ok: return "ok";
    case CellFlag::pullin: return "pullin";
    case CellFlag::softening: return "softening";
  }
  return "unknown";
}

SqueezingMap squeezing_map(std::span<const double> vdc_grid, std::span<const double> vp_grid,
                           const OscillatorParams& osc, const CapacitorGeometry& geom) {
  if (vdc_grid.empty() || vp_grid.empty()) throw ValidationError("squeezing map grids must be non-empty");
  SqueezingMap map;
  map.vdc_grid.assign(vdc_grid.begin(), vdc_grid.end());
  map.vp_grid.assign(vp_grid.begin(), vp_grid.end());
  map.cells.resize(vdc_grid.size() * vp_grid.size());

  // One task per bias row: the equilibrium only depends on V_DC.
  parallel_for(vdc_grid.size(), [&](std::size_t i) {
    const double vdc = vdc_grid[i];
    CellFlag row_flag = CellFlag::ok;
    double x_eq = kNaN;
    double vth = std::numeric_limits<double>::infinity();
    try {
      x_eq = static_equilibrium(osc, geom, vdc);
      frequency_tuning_capacitive(vdc, osc, geom, x_eq);
      if (vdc > 0.0) {
        CapacitorGeometry g = geom;
        g.vdc = vdc;
        vth = threshold_voltage(osc, g, x_eq);
      }
    } catch (const SofteningError&) {
      row_flag = CellFlag::softening;
    } catch (const PullInError&) {
      row_flag = CellFlag::pullin;
    }
    for (std::size_t j = 0; j < vp_grid.size(); ++j) {
      SqueezingCell& c = map.cells[i * vp_grid.size() + j];
      c.vdc = vdc;
      c.vp = vp_grid[j];
      c.flag = row_flag;
      if (row_flag != CellFlag::ok) {
        c.x_eq = c.gs = c.squeezing_db = kNaN;
        continue;
      }
      c.x_eq = x_eq;
      c.gs = std::isfinite(vth) ? vp_grid[j] / vth : 0.0;
      c.squeezing_db = 10.0 * std::log10(1.0 + c.gs);
    }
  });
  return map;
}

void write_squeezing_map_csv(std::ostream& os, const SqueezingMap& map) {
  using detail::num;
  os << "vdc_volts,vp_volts,xeq_m,gs,squeezing_db,flag\n";
  for (const auto& c : map.cells) {
    os << num(c.vdc) << ',' << num(c.vp) << ',' << num(c.x_eq) << ',' << num(c.gs) << ','
       << num(c.squeezing_db) << ',' << to_string(c.flag) << '\n';
  }
}

}  // namespace squeezesim::capdesign
