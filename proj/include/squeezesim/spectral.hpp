#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

// Estimation stack: Welch PSDs, Lorentzian peak fits, threshold regression and
// Allan deviation. All spectra here are single-sided in hertz.

namespace squeezesim::spectral {

enum class Window { rectangular, hann };

std::string_view to_string(Window w);

struct Spectrum {
  double df = 0.0;              // Hz; bin k sits at k * df
  std::vector<double> values;   // unit^2 / Hz, single-sided
  int n_averages = 0;
  Window window = Window::hann;

  double frequency(std::size_t k) const noexcept { return static_cast<double>(k) * df; }
  std::size_t size() const noexcept { return values.size(); }
  /// Sum of values * df, the variance carried by the spectrum.
  double integrated_power() const;
};

/// Averaged modified periodograms with window power normalisation and
/// per-segment mean removal. segment_length must not exceed the trace length.
Spectrum welch_psd(std::span<const double> samples, double dt, std::size_t segment_length,
                   double overlap_fraction = 0.5, Window window = Window::hann);

/// Segment length (power of two) putting about `bins_per_width` bins inside a
/// full width of `gamma_hz`, capped so that at least `min_averages` segments fit.
std::size_t segment_length_for(double gamma_hz, double dt, std::size_t n_samples,
                               double bins_per_width = 30.0, std::size_t min_averages = 16);

struct LorentzianFit {
  double area = 0.0;    // unit^2, equals the fluctuation variance
  double gamma = 0.0;   // Hz, full width at half maximum
  double center = 0.0;  // Hz
  double floor = 0.0;   // unit^2 / Hz
  /// Parameter order: area, gamma, center, floor.
  std::array<std::array<double, 4>, 4> covariance{};
  double exclude_center = 0.0;     // Hz
  double exclude_halfwidth = 0.0;  // Hz
  double chi2_reduced = 0.0;
  std::size_t n_bins = 0;
  int iterations = 0;

  double sigma(std::size_t i) const;
};

/// Single-sided Lorentzian: the peak at c plus its mirror at -c, so that the
/// integral over f >= 0 is `area` wherever the center sits:
/// floor + (area/pi) [hw / ((f-c)^2 + hw^2) + hw / ((f+c)^2 + hw^2)], hw = gamma/2.
double lorentzian(double f, double area, double gamma, double center, double floor);

struct LorentzianFitOptions {
  double exclude_halfwidth = 0.0;  // Hz
  double exclude_center = 0.0;     // Hz; the coherent tone sits at 0 Hz in the rotating frame
  double max_frequency = std::numeric_limits<double>::infinity();  // Hz, upper fit bound
  /// When false the center is held at exclude_center. Rotating-frame spectra
  /// are folded about 0 Hz, so their center must stay there.
  bool fit_center = true;
  /// relative: sigma_i = model_i / sqrt(n_averages), the periodogram scatter.
  /// uniform: equal weights, for additive noise.
  enum class Weighting { relative, uniform } weighting = Weighting::relative;
  int max_iterations = 200;
  /// Refits with the weights recomputed from the previous model.
  int reweight_passes = 3;
};

LorentzianFit lorentzian_fit(const Spectrum& spectrum, const LorentzianFitOptions& options = {});

/// Peak area: the fluctuation variance with the coherent tone and the white
/// floor removed.
inline double variance_from_fit(const LorentzianFit& fit) { return fit.area; }

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);
void write_fit_json(std::ostream& os, const LorentzianFit& fit);

enum class ThresholdModel { variance, gain_amp, gain_deamp };

struct ThresholdFit {
  double vth = 0.0;
  double uncertainty = 0.0;
  double scale = 1.0;  // free overall scale for gain models, fixed to 1 for variance
  double scale_uncertainty = 0.0;
  double chi2_reduced = 0.0;
  int iterations = 0;
};

/// Least squares of y = 1/(1 + V/V_th) (variance), a/(1 + V/V_th) (gain_deamp)
/// or a/(1 - V/V_th) (gain_amp). sigmas, when given, weight the residuals and
/// the uncertainty is then absolute; otherwise it is scaled by the residual
/// scatter.
ThresholdFit fit_threshold(std::span<const double> vp, std::span<const double> y, ThresholdModel model,
                           std::span<const double> sigmas = {});

/// Non-overlapping two-sample deviation of frequency samples, normalised by f0.
std::vector<double> allan_deviation(std::span<const double> freq_hz, double f0,
                                    std::span<const double> taus, double sample_rate);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace squeezesim::spectral
