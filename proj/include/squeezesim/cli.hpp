#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squeezesim/config.hpp"

// Subcommand bodies behind the squeezesim executable. Each writes plot-ready
// CSV to the given stream; identical config and seeds give identical bytes.

namespace squeezesim::cli {

/// Process exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numerical = 3;

std::string_view version();

/// Seeds used by a run: seed, seed + 1, ..., seed + seeds - 1.
std::vector<std::uint64_t> seed_list(const RunSpec& run);

/// "# squeezesim <version>", "# config_hash <hex>", "# seeds <list>".
void write_csv_header(std::ostream& os, const ExperimentConfig& cfg);

/// Variances, dB in both conventions, stability, and the quantum figures of
/// merit when a readout section is present. Rows are `quantity,value`.
void cmd_predict(const ExperimentConfig& cfg, std::ostream& out);

/// simulate -> Welch -> Lorentzian -> variance for every sweep value and
/// seed, then a threshold regression over the aggregated points.
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);

struct SimulateOutputs {
  std::ostream* trace = nullptr;      // CSV, or binary when `binary` is set
  bool binary = false;
  std::ostream* frequency = nullptr;  // PLL frequency record (pll simulator only)
};

void cmd_simulate(const ExperimentConfig& cfg, const SimulateOutputs& out);

struct FitInputs {
  std::optional<std::string> trace_path;  // CSV or .bin; simulated from cfg when absent
  std::string quadrature = "x1";
};

/// Welch PSD of one quadrature and its Lorentzian fit. The spectrum goes to
/// `spectrum` (may be null), the JSON fit report to `report`.
void cmd_fit(const ExperimentConfig& cfg, const FitInputs& in, std::ostream* spectrum, std::ostream& report);

/// Analytic maps: purity or SNR over (g_s, gamma_qba) at optimal feedback, or
/// capacitive squeezing over (V_DC, V_p).
void cmd_map(const ExperimentConfig& cfg, MapKind kind, const Grid& x, const Grid& y, std::ostream& out);

struct FrequencyRecord {
  double sample_rate = 0.0;
  std::vector<double> f_hz;
};

/// Reads `# sample_rate_hz=<v>` plus an `f_hz` (or `t_s,f_hz`) column.
FrequencyRecord read_frequency_csv(std::istream& in);
void write_frequency_csv(std::ostream& os, const FrequencyRecord& rec);

/// Default averaging times: 1, 2, 5 x 10^k samples while at least 3 bins fit.
std::vector<double> default_taus(std::size_t n_samples, double sample_rate);

void cmd_allan(const ExperimentConfig* cfg, const FrequencyRecord& rec, double f0,
               std::span<const double> taus, std::ostream& out);

}  // namespace squeezesim::cli
