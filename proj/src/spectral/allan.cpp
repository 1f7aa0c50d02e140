#include <cmath>
#include <string>

#include "squeezesim/errors.hpp"
#include "squeezesim/spectral.hpp"

namespace squeezesim::spectral {

std::vector<double> allan_deviation(std::span<const double> freq_hz, double f0,
                                    std::span<const double> taus, double sample_rate) {
  if (!(f0 > 0.0)) throw ValidationError("allan: f0 must be > 0");
  if (!(sample_rate > 0.0)) throw ValidationError("allan: sample rate must be > 0");
  std::vector<double> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    if (!(tau > 0.0)) throw ValidationError("allan: tau must be > 0");
    const double m_real = tau * sample_rate;
    const double m_round = std::round(m_real);
    if (m_round < 1.0 || std::abs(m_real - m_round) > 1e-9 * m_real)
      throw ValidationError("allan: tau = " + std::to_string(tau) + " s is not a multiple of the sample interval");
    const auto m = static_cast<std::size_t>(m_round);
    const std::size_t bins = freq_hz.size() / m;
    if (bins < 3) {
      throw ValidationError("allan: insufficient samples for tau = " + std::to_string(tau) + " s (" +
                            std::to_string(bins) + " averaging bins, need >= 3)");
    }
    double prev = 0.0;
    double acc = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += freq_hz[b * m + i];
      const double mean = s / static_cast<double>(m);
      if (b > 0) acc += (mean - prev) * (mean - prev);
      prev = mean;
    }
    out.push_back(std::sqrt(acc / (2.0 * static_cast<double>(bins - 1))) / f0);
  }
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope needs >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("loglog_slope needs positive values");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace squeezesim::spectral
