#include <cmath>
#include <string>

#include "squeezesim/errors.hpp"
#include "squeezesim/simulate.hpp"

namespace squeezesim::simulate {

LockIn::LockIn(double input_dt, const LockinOptions& options)
    : input_dt_(input_dt), order_(options.order) {
  if (!(input_dt > 0.0)) throw ValidationError("lock-in input dt must be > 0");
  if (!(options.bandwidth_hz > 0.0)) throw ValidationError("lock-in bandwidth must be > 0");
  if (options.order < 1 || options.order > 8) throw ValidationError("lock-in filter order must be 1..8");
  const double rate = options.sample_rate_hz > 0.0 ? options.sample_rate_hz : 8.0 * options.bandwidth_hz;
  if (rate < 2.0 * options.bandwidth_hz) {
    throw ValidationError("lock-in sample rate " + std::to_string(rate) +
                          " Sa/s aliases a bandwidth of " + std::to_string(options.bandwidth_hz) + " Hz");
  }
  const double input_rate = 1.0 / input_dt;
  if (rate > input_rate * (1.0 + 1e-9)) throw ValidationError("lock-in sample rate exceeds input rate");
  decimation_ = static_cast<std::size_t>(std::max(1.0, std::round(input_rate / rate)));
  output_dt_ = static_cast<double>(decimation_) * input_dt;
  if (1.0 / output_dt_ < 2.0 * options.bandwidth_hz) {
    throw ValidationError("lock-in output rate aliases the filter bandwidth");
  }
  // Per-section corner such that the whole cascade is 3 dB down at the bandwidth.
  const double fc = options.bandwidth_hz / std::sqrt(std::pow(2.0, 1.0 / order_) - 1.0);
  if (fc >= 0.5 * input_rate) throw ValidationError("lock-in bandwidth too close to input Nyquist");
  a_ = -std::expm1(-constants::two_pi * fc * input_dt);
  i_.assign(order_, 0.0);
  q_.assign(order_, 0.0);
}

bool LockIn::push(double x, double theta) {
  double in_i = 2.0 * x * std::sin(theta);
  double in_q = 2.0 * x * std::cos(theta);
  for (int k = 0; k < order_; ++k) {
    i_[k] += a_ * (in_i - i_[k]);
    q_[k] += a_ * (in_q - q_[k]);
    in_i = i_[k];
    in_q = q_[k];
  }
  if (++counter_ >= decimation_) {
    counter_ = 0;
    return true;
  }
  return false;
}

double LockIn::power_response(double f_hz) const {
  const double b = 1.0 - a_;
  const double one = a_ * a_ / (1.0 - 2.0 * b * std::cos(constants::two_pi * f_hz * input_dt_) + b * b);
  return std::pow(one, order_);
}

QuadratureTrace lockin_demodulate(const PositionTrace& trace, double omega,
                                  const LockinOptions& options) {
  if (!(omega > 0.0)) throw ValidationError("demodulation frequency must be > 0");
  if (options.bandwidth_hz > 0.1 * omega / constants::two_pi) {
    throw ValidationError("lock-in bandwidth must be well below the reference frequency (<= 10%)");
  }
  LockIn li(trace.dt, options);
  QuadratureTrace out;
  out.dt = li.output_dt();
  out.seed = trace.seed;
  out.x1.reserve(trace.size() / li.decimation() + 1);
  out.x2.reserve(trace.size() / li.decimation() + 1);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double theta = std::fmod(omega * (static_cast<double>(i) * trace.dt), constants::two_pi);
    if (li.push(trace.x[i], theta)) {
      out.x1.push_back(li.x1());
      out.x2.push_back(li.x2());
    }
  }
  // Twenty section time constants for the filter transient.
  const double tau = trace.dt / li.stage_coefficient();
  out.settle_samples = std::min(out.x1.size(), static_cast<std::size_t>(std::ceil(20.0 * tau / out.dt)));
  return out;
}

}  // namespace squeezesim::simulate
