#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "squeezesim/model.hpp"

// Electrostatic parametric actuator: a metallised membrane pad above a fixed
// electrode. Displacement x is measured towards the electrode, so the gap is
// d0 - x and the capacitance grows as x -> d0.

namespace squeezesim::capdesign {

struct CapacitorGeometry {
  double alpha = 0.0;  // F m
  double c0 = 0.0;     // F, self-capacitance
  double d0 = 0.0;     // m, initial separation
  double vdc = 0.0;    // V, bias
  double vp = 0.0;     // V, peak modulation

  void validate() const;

  bool operator==(const CapacitorGeometry&) const = default;
};

struct PiezoTuning {
  double slope_hz_per_v = 0.0;

  bool operator==(const PiezoTuning&) const = default;
};

/// C(x) = C0 + alpha / (d0 - x). Throws GeometryError for x >= d0.
double capacitance(double x, const CapacitorGeometry& geom);
/// dC/dx = alpha / (d0 - x)^2
double capacitance_slope(double x, const CapacitorGeometry& geom);
/// d2C/dx2 = 2 alpha / (d0 - x)^3
double capacitance_curvature(double x, const CapacitorGeometry& geom);

/// Amplitude of the stiffness modulation at the pump frequency:
/// k_p = |C''(x_eq)| V_DC V_p (cross term of V(t)^2).
double parametric_stiffness(const CapacitorGeometry& geom, double x_eq);

/// V_th = 2 k_m / (Q V_DC |C''(x_eq)|). Throws ValidationError for V_DC = 0.
double threshold_voltage(const OscillatorParams& osc, const CapacitorGeometry& geom, double x_eq);

/// Softened frequency omega_m sqrt(1 - |C''| V^2 / (2 k_m)).
/// Throws GeometryError when the radicand is not positive.
double frequency_tuning_capacitive(double vdc, const OscillatorParams& osc,
                                   const CapacitorGeometry& geom, double x_eq);

/// Bias at which the softened stiffness reaches zero at fixed x_eq: sqrt(2 k_m / |C''|).
double softening_collapse_voltage(const OscillatorParams& osc, const CapacitorGeometry& geom,
                                  double x_eq);

/// Closed-form pull-in bias for the 1/gap capacitance: sqrt(8 k_m d0^3 / (27 alpha)).
/// Pull-in happens at x = d0 / 3.
double pull_in_voltage(const OscillatorParams& osc, const CapacitorGeometry& geom);

/// Stable root of k_m x = (1/2) C'(x) V_DC^2 in [0, d0). Newton steps inside a
/// bisection bracket [0, d0/3]. Throws GeometryError past pull-in.
double static_equilibrium(const OscillatorParams& osc, const CapacitorGeometry& geom, double vdc);

/// Omega_m + 2 pi slope V_DC.
double frequency_tuning_piezo(double vdc, const PiezoTuning& tuning, const OscillatorParams& osc);

enum class CellFlag { ok, pullin, softening };

std::string_view to_string(CellFlag flag);

struct SqueezingCell {
  double vdc = 0.0;
  double vp = 0.0;
  double x_eq = 0.0;  // NaN when flagged
  double gs = 0.0;    // NaN when flagged
  double squeezing_db = 0.0;  // 10 log10(1 + gs); NaN when flagged
  CellFlag flag = CellFlag::ok;
};

/// Row-major over vdc (outer) then vp (inner).
struct SqueezingMap {
  std::vector<double> vdc_grid;
  std::vector<double> vp_grid;
  std::vector<SqueezingCell> cells;

  const SqueezingCell& at(std::size_t i_vdc, std::size_t i_vp) const {
    return cells[i_vdc * vp_grid.size() + i_vp];
  }
};

/// Predicted sigma1 squeezing with feedback-stabilised X2 over a (V_DC, V_p)
/// grid. The geometry's own vdc/vp fields are ignored. Cells beyond pull-in
/// carry flag `pullin` and NaN values.
SqueezingMap squeezing_map(std::span<const double> vdc_grid, std::span<const double> vp_grid,
                           const OscillatorParams& osc, const CapacitorGeometry& geom);

/// CSV with header `vdc_volts,vp_volts,xeq_m,gs,squeezing_db,flag`.
void write_squeezing_map_csv(std::ostream& os, const SqueezingMap& map);

}  // namespace squeezesim::capdesign
