// squeezesim: command-line front end.
//
//   squeezesim predict  --config c.toml
//   squeezesim sweep    --config c.toml --out sweep.csv
//   squeezesim simulate --config c.toml --out trace.csv [--freq-out f.csv]
//   squeezesim fit      --config c.toml [--in trace.csv] --out psd.csv --report fit.json
//   squeezesim map      --config c.toml --kind purity --grid 0:1:41 --grid 0:0.1:41,lin
//   squeezesim allan    --in f.csv [--f0 1e6] [--tau 0.1 --tau 1]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "squeezesim/cli.hpp"
#include "squeezesim/errors.hpp"

namespace cli = squeezesim::cli;

namespace {

// Output goes to a file or, with no path or "-", to stdout.
class OutputTarget {
public:
  explicit OutputTarget(const std::string& path, bool binary = false) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
    if (!*file_) throw squeezesim::ValidationError("cannot open output file " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw squeezesim::NumericalError("write failed");
  }

private:
  std::unique_ptr<std::ofstream> file_;
};

struct Options {
  std::string config;
  std::string out;
  std::string in;
  std::string report;
  std::string freq_out;
  std::string kind;
  std::string quadrature = "x1";
  std::vector<std::string> grids;
  std::vector<double> taus;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<double> f0;
};

cli::ExperimentConfig load(const Options& o, bool required = true) {
  if (o.config.empty()) {
    if (required) throw squeezesim::ValidationError("--config is required");
    return {};
  }
  cli::ExperimentConfig cfg = cli::load_config(o.config);
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.seeds) {
    if (*o.seeds == 0) throw squeezesim::ValidationError("--seeds: seed list must not be empty");
    cfg.run.seeds = *o.seeds;
  }
  return cfg;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int run(const std::string& command, const Options& o) {
  if (command == "predict") {
    const auto cfg = load(o);
    OutputTarget out(o.out);
    cli::cmd_predict(cfg, out.stream());
    out.finish();
  } else if (command == "sweep") {
    const auto cfg = load(o);
    OutputTarget out(o.out);
    cli::cmd_sweep(cfg, out.stream());
    out.finish();
  } else if (command == "simulate") {
    const auto cfg = load(o);
    const bool binary = ends_with(o.out, ".bin");
    OutputTarget out(o.out, binary);
    std::optional<OutputTarget> freq;
    if (!o.freq_out.empty()) freq.emplace(o.freq_out);
    cli::SimulateOutputs so;
    so.trace = &out.stream();
    so.binary = binary;
    so.frequency = freq ? &freq->stream() : nullptr;
    cli::cmd_simulate(cfg, so);
    out.finish();
    if (freq) freq->finish();
  } else if (command == "fit") {
    const auto cfg = load(o);
    cli::FitInputs in;
    if (!o.in.empty()) in.trace_path = o.in;
    in.quadrature = o.quadrature;
    std::optional<OutputTarget> spectrum;
    if (!o.out.empty()) spectrum.emplace(o.out);
    OutputTarget report(o.report);
    cli::cmd_fit(cfg, in, spectrum ? &spectrum->stream() : nullptr, report.stream());
    if (spectrum) spectrum->finish();
    report.finish();
  } else if (command == "map") {
    const auto cfg = load(o);
    cli::MapKind kind = cfg.map ? cfg.map->kind : cli::MapKind::purity;
    if (!o.kind.empty()) kind = cli::parse_map_kind(o.kind);
    std::optional<cli::Grid> gx = cfg.map ? cfg.map->x : std::nullopt;
    std::optional<cli::Grid> gy = cfg.map ? cfg.map->y : std::nullopt;
    if (o.grids.size() > 2) throw squeezesim::ValidationError("--grid: at most two axes (x then y)");
    if (o.grids.size() >= 1) gx = cli::parse_grid(o.grids[0]);
    if (o.grids.size() >= 2) gy = cli::parse_grid(o.grids[1]);
    if (!gx || !gy) throw squeezesim::ValidationError("map: need x and y grids (--grid or [map] section)");
    OutputTarget out(o.out);
    cli::cmd_map(cfg, kind, *gx, *gy, out.stream());
    out.finish();
  } else if (command == "allan") {
    if (o.in.empty()) throw squeezesim::ValidationError("--in is required");
    std::ifstream f(o.in);
    if (!f) throw squeezesim::ValidationError("cannot open " + o.in);
    const auto rec = cli::read_frequency_csv(f);
    std::optional<cli::ExperimentConfig> cfg;
    if (!o.config.empty()) cfg = load(o);
    double f0 = 0.0;
    if (o.f0) {
      f0 = *o.f0;
    } else if (cfg && cfg->oscillator) {
      f0 = cfg->oscillator->omega_m() / squeezesim::constants::two_pi;
    } else {
      throw squeezesim::ValidationError("allan: give --f0 or a config with an oscillator section");
    }
    OutputTarget out(o.out);
    cli::cmd_allan(cfg ? &*cfg : nullptr, rec, f0, o.taus, out.stream());
    out.finish();
  }
  return cli::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermomechanical squeezing simulator"};
  app.set_version_flag("--version", std::string(cli::version()));
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config,-c", o.config, "experiment config (.toml or .json)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    else c->check(CLI::ExistingFile);
    sub->add_option("--out,-o", o.out, "output path ('-' for stdout)");
    sub->add_option("--seed", o.seed, "base seed (overrides run.seed)");
    sub->add_option("--seeds", o.seeds, "number of seeds (overrides run.seeds)");
  };

  auto* predict = app.add_subcommand("predict", "closed-form variances and figures of merit");
  add_common(predict, true);

  auto* sweep = app.add_subcommand("sweep", "simulate and fit across a sweep, then regress the threshold");
  add_common(sweep, true);

  auto* simulate = app.add_subcommand("simulate", "write a time-domain trace (.csv or .bin)");
  add_common(simulate, true);
  simulate->add_option("--freq-out", o.freq_out, "PLL drive frequency record (pll simulator)");

  auto* fit = app.add_subcommand("fit", "Welch spectrum and Lorentzian fit of one quadrature");
  add_common(fit, true);
  fit->add_option("--in,-i", o.in, "trace to analyse (simulated from the config if absent)")->check(CLI::ExistingFile);
  fit->add_option("--report", o.report, "JSON fit report (default stdout)");
  fit->add_option("--quadrature", o.quadrature, "x1 or x2")->check(CLI::IsMember({"x1", "x2"}));

  auto* map = app.add_subcommand("map", "purity, snr or capacitive squeezing over a 2D grid");
  add_common(map, true);
  map->add_option("--kind", o.kind, "purity, snr or squeezing")->check(CLI::IsMember({"purity", "snr", "squeezing"}));
  map->add_option("--grid", o.grids, "axis min:max:n[,log|lin]; first x, then y");

  auto* allan = app.add_subcommand("allan", "Allan deviation of a frequency record");
  add_common(allan, false);
  allan->add_option("--in,-i", o.in, "frequency CSV")->required()->check(CLI::ExistingFile);
  allan->add_option("--f0", o.f0, "nominal frequency in Hz");
  allan->add_option("--tau", o.taus, "averaging time in s (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_validation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const squeezesim::ValidationError& e) {
    std::cerr << "squeezesim " << command << ": " << e.what() << '\n';
    return cli::exit_validation;
  } catch (const squeezesim::InstabilityError& e) {
    std::cerr << "squeezesim " << command << ": unstable: " << e.what() << '\n';
    return cli::exit_numerical;
  } catch (const squeezesim::GeometryError& e) {
    std::cerr << "squeezesim " << command << ": geometry: " << e.what() << '\n';
    return cli::exit_numerical;
  } catch (const squeezesim::NumericalError& e) {
    std::cerr << "squeezesim " << command << ": numerical: " << e.what() << '\n';
    return cli::exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "squeezesim " << command << ": " << e.what() << '\n';
    return cli::exit_numerical;
  }
}
