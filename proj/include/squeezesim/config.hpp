#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "squeezesim/capdesign.hpp"
#include "squeezesim/model.hpp"

// Experiment configuration shared by every subcommand.
//
// Files are TOML or JSON with the same schema. Keys carry their unit as a
// suffix (mass_ng, frequency_mhz, d0_um, ...); everything is converted to SI
// on load and written back in SI, so parse -> serialize -> parse is exact.

namespace squeezesim::cli {

/// Axis specification "min:max:n[,log]".
struct Grid {
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
  bool log = false;

  std::vector<double> values() const;
  void validate(std::string_view where) const;

  bool operator==(const Grid&) const = default;
};

Grid parse_grid(std::string_view text);
std::string to_string(const Grid& g);

struct DriveSpec {
  ParametricPhase phase = ParametricPhase::deamplify;
  double f0 = 0.0;  // N
  std::optional<double> gs;
  std::optional<double> vp;   // V, with vth or a capacitor section
  std::optional<double> vth;  // V
  std::optional<double> kp;   // N/m

  bool operator==(const DriveSpec&) const = default;
};

struct FeedbackSpec {
  std::optional<double> gfb;
  std::optional<double> gfb_per_gs;  // g_fb = ratio * g_s at every sweep point
  std::optional<PllSettings> pll;

  bool operator==(const FeedbackSpec&) const = default;
};

enum class Observable { variance, gain };

struct SweepSpec {
  std::string variable;  // dotted path, e.g. "drive.vp_v"
  std::vector<double> values;
  Observable observable = Observable::variance;

  bool operator==(const SweepSpec&) const = default;
};

enum class SimulatorKind { rotating, position, pll };

struct RunSpec {
  SimulatorKind simulator = SimulatorKind::rotating;
  std::optional<double> duration;         // s
  std::optional<double> duration_decays;  // multiples of 1 / Gamma of the slowest quadrature
  std::optional<double> dt;               // s
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  double bins_per_linewidth = 30.0;
  double fit_span_linewidths = 20.0;
  std::optional<double> exclude_halfwidth;  // Hz
  std::optional<double> lockin_bandwidth;   // Hz
  std::optional<double> lockin_rate;        // Sa/s
  std::optional<double> acquisition_time;   // s

  bool operator==(const RunSpec&) const = default;
};

enum class MapKind { purity, snr, squeezing };

struct MapSpec {
  MapKind kind = MapKind::purity;
  std::optional<Grid> x;
  std::optional<Grid> y;

  bool operator==(const MapSpec&) const = default;
};

struct ExperimentConfig {
  std::optional<OscillatorParams> oscillator;
  std::optional<ThermalBath> bath;
  std::optional<DriveSpec> drive;
  std::optional<FeedbackSpec> feedback;
  std::optional<QuantumReadout> readout;
  std::optional<capdesign::CapacitorGeometry> capacitor;
  std::optional<SweepSpec> sweep;
  std::optional<MapSpec> map;
  RunSpec run;

  bool operator==(const ExperimentConfig&) const = default;
};

enum class ConfigFormat { toml, json };

/// Parses and validates; errors name the offending field path.
ExperimentConfig parse_config(std::string_view text, ConfigFormat format);
/// Format from the extension (.json, otherwise TOML).
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_toml(const ExperimentConfig& cfg);
std::string to_json(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical JSON serialisation, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Accessors that throw ValidationError naming the missing section.
const OscillatorParams& require_oscillator(const ExperimentConfig& cfg);
const ThermalBath& require_bath(const ExperimentConfig& cfg);

/// g_s from the drive section: gs, vp / vth, kp, or vp with the capacitor's
/// threshold at its static equilibrium. Zero without a drive section.
double resolve_gs(const ExperimentConfig& cfg);
/// g_fb: explicit, ratio times g_s, or the PLL calibration. Zero by default.
double resolve_gfb(const ExperimentConfig& cfg, double gs);

/// Sets a sweepable field by dotted path. Throws ValidationError on unknown paths.
void apply_sweep_value(ExperimentConfig& cfg, std::string_view path, double value);

std::string_view to_string(ParametricPhase p);
std::string_view to_string(Observable o);
std::string_view to_string(SimulatorKind s);
std::string_view to_string(MapKind k);
MapKind parse_map_kind(std::string_view s);

}  // namespace squeezesim::cli
