#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "squeezesim/errors.hpp"
#include "squeezesim/model.hpp"
#include "squeezesim/spectral.hpp"

namespace squeezesim::spectral {

namespace {

// FFTW's planner is not reentrant; execution of a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    if (!in_ || !out_) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    // ESTIMATE keeps the plan, and so the rounding, independent of timing.
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("FFTW plan creation failed");
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1]; }

private:
  std::size_t n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::string_view to_string(Window w) {
  return w == Window::hann ? "hann" : "rectangular";
}

double Spectrum::integrated_power() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * df;
}

Spectrum welch_psd(std::span<const double> samples, double dt, std::size_t segment_length,
                   double overlap_fraction, Window window) {
  if (!(dt > 0.0)) throw ValidationError("sample interval must be > 0");
  if (segment_length < 4) throw ValidationError("segment length must be >= 4");
  if (segment_length > samples.size()) {
    throw ValidationError("trace too short: " + std::to_string(samples.size()) +
                          " samples for segment length " + std::to_string(segment_length));
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw ValidationError("overlap must be in [0, 1)");

  const std::size_t n = segment_length;
  std::size_t hop = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - overlap_fraction)));
  if (hop == 0) hop = 1;

  std::vector<double> w(n, 1.0);
  if (window == Window::hann) {
    // Periodic Hann, the usual choice for spectral estimation.
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(constants::two_pi * static_cast<double>(i) / static_cast<double>(n));
  }
  double wss = 0.0;
  for (double v : w) wss += v * v;

  RealFft fft(n);
  const std::size_t nb = n / 2 + 1;
  Spectrum sp;
  sp.df = 1.0 / (static_cast<double>(n) * dt);
  sp.window = window;
  sp.values.assign(nb, 0.0);

  int count = 0;
  for (std::size_t start = 0; start + n <= samples.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += samples[start + i];
    mean /= static_cast<double>(n);
    double* in = fft.input();
    for (std::size_t i = 0; i < n; ++i) in[i] = (samples[start + i] - mean) * w[i];
    fft.execute();
    for (std::size_t k = 0; k < nb; ++k) sp.values[k] += fft.power(k);
    ++count;
  }

  // |X_k|^2 dt / sum(w^2) is the double-sided density; fold negative frequencies.
  const double norm = dt / (wss * count);
  for (std::size_t k = 0; k < nb; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    sp.values[k] *= norm * (edge ? 1.0 : 2.0);
  }
  sp.n_averages = count;
  return sp;
}

std::size_t segment_length_for(double gamma_hz, double dt, std::size_t n_samples,
                               double bins_per_width, std::size_t min_averages) {
  if (!(gamma_hz > 0.0) || !(dt > 0.0)) throw ValidationError("segment sizing needs gamma > 0 and dt > 0");
  const double want = bins_per_width / (gamma_hz * dt);
  std::size_t n = 16;
  while (static_cast<double>(n) < want && n < (std::size_t{1} << 26)) n <<= 1;
  // With 50% overlap, k averages need (k + 1) n / 2 samples.
  while (n > 16 && (min_averages + 1) * n / 2 > n_samples) n >>= 1;
  if (n > n_samples) throw ValidationError("trace too short for spectral estimation");
  return n;
}

}  // namespace squeezesim::spectral
