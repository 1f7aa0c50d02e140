#pragma once

#include <cmath>

#include "squeezesim/model.hpp"

namespace squeezesim::simulate::detail {

// Strang splitting for m x'' + m Gamma x' + k x = F(t, x, v):
// half damping, half kick, exact rotation at omega_m, half kick, half damping.
// The rotation carries the harmonic part exactly, so there is no numerical
// frequency shift however coarse the step.
class Integrator {
public:
  Integrator(const OscillatorParams& osc, double dt)
      : w_(osc.omega_m()),
        inv_m_(1.0 / osc.mass()),
        h_(dt),
        damp_half_(std::exp(-0.5 * osc.gamma_m() * dt)),
        c_(std::cos(osc.omega_m() * dt)),
        s_(std::sin(osc.omega_m() * dt)) {}

  double x = 0.0;
  double v = 0.0;

  // force_start / force_end evaluate the external force (without the thermal
  // term) at the step endpoints given the current (x, v).
  template <class F0, class F1>
  void step(F0&& force_start, F1&& force_end, double thermal) {
    v *= damp_half_;
    v += 0.5 * h_ * (force_start(x, v) + thermal) * inv_m_;
    const double xn = x * c_ + (v / w_) * s_;
    const double vn = -x * w_ * s_ + v * c_;
    x = xn;
    v = vn;
    v += 0.5 * h_ * (force_end(x, v) + thermal) * inv_m_;
    v *= damp_half_;
  }

private:
  double w_;
  double inv_m_;
  double h_;
  double damp_half_;
  double c_;
  double s_;
};

}  // namespace squeezesim::simulate::detail
