#include "squeezesim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "../numfmt.hpp"
#include "squeezesim/analytic.hpp"
#include "squeezesim/capdesign.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/parallel.hpp"
#include "squeezesim/simulate.hpp"
#include "squeezesim/spectral.hpp"

#ifndef SQUEEZESIM_VERSION
#define SQUEEZESIM_VERSION "0.0.0"
#endif

namespace squeezesim::cli {

using squeezesim::detail::num;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDefaultDecays = 5000.0;

// Everything a rotating-frame run needs, resolved from the config.
struct RotatingPlan {
  OscillatorParams osc = OscillatorParams::from_q(1.0, 1.0, 10.0);
  ThermalBath bath;
  std::optional<QuantumReadout> readout;
  ParametricPhase phase = ParametricPhase::deamplify;
  double f0 = 0.0;
  double gs = 0.0;
  double gfb = 0.0;
  double g1 = 0.0;  // rad/s
  double g2 = 0.0;
  double dt = 0.0;
  double duration = 0.0;

  bool stable() const { return g1 > 0.0 && g2 > 0.0; }
};

RotatingPlan plan_rotating(const ExperimentConfig& cfg) {
  RotatingPlan p;
  p.osc = require_oscillator(cfg);
  p.bath = require_bath(cfg);
  p.readout = cfg.readout;
  if (cfg.drive) {
    p.phase = cfg.drive->phase;
    p.f0 = cfg.drive->f0;
  }
  p.gs = resolve_gs(cfg);
  p.gfb = resolve_gfb(cfg, p.gs);
  std::tie(p.g1, p.g2) = simulate::quadrature_rates(p.osc, p.gs, p.gfb, p.phase);
  p.dt = cfg.run.dt.value_or(simulate::max_rotating_step(p.osc, p.gs, p.gfb, p.phase));
  if (cfg.run.duration) {
    p.duration = *cfg.run.duration;
  } else {
    const double slowest = p.stable() ? std::min(p.g1, p.g2) : p.osc.gamma_m();
    p.duration = cfg.run.duration_decays.value_or(kDefaultDecays) / slowest;
  }
  return p;
}

double exclusion_halfwidth(const ExperimentConfig& cfg) {
  if (cfg.run.exclude_halfwidth) return *cfg.run.exclude_halfwidth;
  // Default: five PLL bandwidths around the coherent tone, none without a PLL.
  if (cfg.feedback && cfg.feedback->pll) return 5.0 * cfg.feedback->pll->bandwidth_hz;
  return 0.0;
}

struct QuadratureFit {
  spectral::Spectrum spectrum;
  spectral::LorentzianFit fit;
};

QuadratureFit fit_quadrature(std::span<const double> x, double dt, double expected_gamma_rad,
                             const RunSpec& run, double exclude_hz) {
  const double fwhm = expected_gamma_rad / constants::two_pi;
  const std::size_t seg = spectral::segment_length_for(fwhm, dt, x.size(), run.bins_per_linewidth, 16);
  QuadratureFit q;
  q.spectrum = spectral::welch_psd(x, dt, seg, 0.5, spectral::Window::hann);
  spectral::LorentzianFitOptions opt;
  opt.fit_center = false;
  opt.exclude_center = 0.0;
  opt.exclude_halfwidth = exclude_hz;
  opt.max_frequency = std::max(run.fit_span_linewidths * fwhm, exclude_hz + 10.0 * fwhm);
  q.fit = spectral::lorentzian_fit(q.spectrum, opt);
  return q;
}

// Variance of X1 with the drive off (g_s = 0), the squeezing reference.
double reference_variance(const RotatingPlan& p) {
  if (!p.readout) return classical_sigma0_sq(p.osc, p.bath);
  const double zpf2 = std::pow(zero_point_amplitude(p.osc), 2);
  return zpf2 * (2.0 * p.bath.nbar(p.osc.omega_m()) + 1.0 + 2.0 * p.readout->gamma_qba);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
  if (v.size() < 2) return kNaN;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::string flag_for(const std::exception& e) {
  if (dynamic_cast<const InstabilityError*>(&e)) return "unstable";
  if (dynamic_cast<const GeometryError*>(&e)) return "geometry";
  if (dynamic_cast<const NumericalError*>(&e)) return "fit_failed";
  return "invalid";
}

void write_row(std::ostream& os, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) os << ',';
    os << c;
    first = false;
  }
  os << '\n';
}

// Marks cells whose boolean differs from a 4-neighbour, i.e. cells the level
// curve passes through. Grid is row-major with ny columns.
std::vector<int> contour_cells(const std::vector<int>& side, std::size_t nx, std::size_t ny) {
  std::vector<int> mark(side.size(), 0);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t k = i * ny + j;
      if (side[k] < 0) continue;
      auto differs = [&](std::size_t o) { return side[o] >= 0 && side[o] != side[k]; };
      if ((i > 0 && differs(k - ny)) || (i + 1 < nx && differs(k + ny)) || (j > 0 && differs(k - 1)) ||
          (j + 1 < ny && differs(k + 1)))
        mark[k] = 1;
    }
  }
  return mark;
}

}  // namespace

std::string_view version() { return SQUEEZESIM_VERSION; }

std::vector<std::uint64_t> seed_list(const RunSpec& run) {
  if (run.seeds == 0) throw ValidationError("config.run.seeds: seed list must not be empty");
  std::vector<std::uint64_t> s(run.seeds);
  for (std::size_t i = 0; i < run.seeds; ++i) s[i] = run.seed + i;
  return s;
}

void write_csv_header(std::ostream& os, const ExperimentConfig& cfg) {
  os << "# squeezesim " << version() << '\n';
  os << "# config_hash " << config_hash(cfg) << '\n';
  os << "# seeds ";
  const auto seeds = seed_list(cfg.run);
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << '\n';
}

// ---------------------------------------------------------------- predict

void cmd_predict(const ExperimentConfig& cfg, std::ostream& out) {
  const double gs = resolve_gs(cfg);
  const double gfb = resolve_gfb(cfg, gs);
  const ParametricPhase phase = cfg.drive ? cfg.drive->phase : ParametricPhase::deamplify;
  const double sigma0_sq = (cfg.oscillator && cfg.bath) ? classical_sigma0_sq(*cfg.oscillator, *cfg.bath) : kNaN;

  double r1 = kNaN;
  double r2 = kNaN;
  bool stable = false;
  if (phase == ParametricPhase::deamplify) {
    try {
      const auto v = analytic::classical_variances(gs, gfb, 1.0);
      r1 = v.sigma1_sq;
      r2 = v.sigma2_sq;
      stable = true;
    } catch (const InstabilityError& e) {
      r1 = e.sigma1_sq();
      r2 = std::numeric_limits<double>::infinity();
    }
  } else {
    // Amplifying branch: X1 carries the 1/(1 - g_s) gain, X2 the damping.
    stable = gs < 1.0;
    r1 = stable ? 1.0 / (1.0 - gs) : std::numeric_limits<double>::infinity();
    r2 = 1.0 / (1.0 + gs + gfb);
  }

  write_csv_header(out, cfg);
  out << "quantity,value\n";
  auto row = [&](std::string_view name, double v) { out << name << ',' << num(v) << '\n'; };
  out << "phase," << to_string(phase) << '\n';
  row("gs", gs);
  row("gfb", gfb);
  row("stable", stable ? 1.0 : 0.0);
  row("sigma0_sq_m2", sigma0_sq);
  row("sigma1_sq_m2", sigma0_sq * r1);
  row("sigma2_sq_m2", sigma0_sq * r2);
  row("sigma1_ratio_db10", analytic::db10(r1));
  row("sigma1_ratio_db20", analytic::db20(r1));
  row("sigma2_ratio_db10", analytic::db10(r2));
  row("sigma2_ratio_db20", analytic::db20(r2));
  double gain = kNaN;
  try {
    gain = analytic::amplitude_gain(gs, phase);
  } catch (const InstabilityError&) {
    gain = std::numeric_limits<double>::infinity();
  }
  row("amplitude_gain", gain);
  row("amplitude_gain_db20", analytic::db20(gain));

  if (cfg.oscillator && cfg.bath) {
    const double nbar = cfg.bath->nbar(cfg.oscillator->omega_m());
    row("nbar", nbar);
    row("x_zpf_m", zero_point_amplitude(*cfg.oscillator));
    row("required_squeezing_db10", analytic::required_squeezing_db10(nbar));
    if (cfg.readout) {
      const double zpf = zero_point_amplitude(*cfg.oscillator);
      const QuantumReadout& ro = *cfg.readout;
      row("gamma_qba", ro.gamma_qba);
      row("eta_det", ro.eta_det);
      row("zpf_boundary_gs", analytic::zero_point_boundary_gs(nbar, ro));
      row("snr", analytic::detection_snr(gs, nbar, ro));
      if (ro.g_meas() > 0.0) {
        const double gopt = analytic::optimal_feedback_gain(gs, nbar, ro);
        const auto qv = analytic::quantum_variances(gs, gopt, nbar, ro, zpf);
        row("gfb_optimal", gopt);
        row("q_sigma1_sq_m2", qv.sigma1_sq);
        row("q_sigma2_sq_m2", qv.sigma2_sq);
        row("q_sigma1_over_zpf_db10", analytic::db10(qv.sigma1_sq / (zpf * zpf)));
        row("purity", analytic::purity(qv, zpf));
      }
    }
  }
}

// ------------------------------------------------------------------ sweep

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.sweep) throw ValidationError("config.sweep: section required by sweep");
  const SweepSpec& sw = *cfg.sweep;
  const auto seeds = seed_list(cfg.run);
  if (cfg.run.simulator != SimulatorKind::rotating)
    throw ValidationError("config.run.simulator: sweep runs the rotating-frame simulator");
  const bool gain_mode = sw.observable == Observable::gain;
  if (gain_mode && (!cfg.drive || !(cfg.drive->f0 > 0.0)))
    throw ValidationError("config.drive.f0_n: gain sweeps need a coherent drive > 0");

  const std::size_t nv = sw.values.size();
  const std::size_t ns = seeds.size();

  std::vector<ExperimentConfig> point_cfg(nv, cfg);
  std::vector<std::optional<RotatingPlan>> plans(nv);
  std::vector<std::string> point_flag(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    try {
      apply_sweep_value(point_cfg[i], sw.variable, sw.values[i]);
      plans[i] = plan_rotating(point_cfg[i]);
      if (!plans[i]->stable()) point_flag[i] = "unstable";
    } catch (const ValidationError& e) {
      // Missing sections are configuration errors, not per-point failures.
      if (std::string(e.what()).rfind("config.", 0) == 0) throw;
      point_flag[i] = "invalid";
    } catch (const std::exception& e) {
      point_flag[i] = flag_for(e);
    }
  }
  const double exclude = exclusion_halfwidth(cfg);

  struct Cell {
    bool ok = false;
    std::string flag;
    double value = kNaN;  // variance (m^2) or gain
    double gamma_hz = kNaN;
  };
  std::vector<Cell> cells(nv * ns);

  parallel_for(nv * ns, [&](std::size_t k) {
    const std::size_t i = k / ns;
    const std::size_t j = k % ns;
    Cell& c = cells[k];
    if (!point_flag[i].empty()) {
      c.flag = point_flag[i];
      return;
    }
    const RotatingPlan& p = *plans[i];
    try {
      simulate::RotatingOptions opt;
      opt.phase = p.phase;
      opt.f0 = gain_mode ? p.f0 : 0.0;
      const auto tr = simulate::simulate_rotating(p.osc, p.bath, p.gs, p.gfb, p.readout, p.duration, p.dt,
                                                  seeds[j] + i * ns, opt);
      if (tr.divergent) {
        c.flag = "divergent";
        return;
      }
      if (gain_mode) {
        const double ref = p.f0 / (p.osc.mass() * p.osc.omega_m() * p.osc.gamma_m());
        c.value = mean_of(tr.steady_x1()) / ref;
      } else {
        const auto q = fit_quadrature(tr.steady_x1(), tr.dt, p.g1, cfg.run, exclude);
        c.value = spectral::variance_from_fit(q.fit);
        c.gamma_hz = q.fit.gamma;
      }
      c.ok = true;
    } catch (const std::exception& e) {
      c.flag = flag_for(e);
    }
  });

  write_csv_header(out, cfg);
  out << "# sweep " << sw.variable << " observable " << to_string(sw.observable) << '\n';
  out << "# point i runs seeds s + i * " << ns << " for each listed seed s\n";
  out << "row,value,gs,gfb,seeds_ok,mean,stderr,ratio_db10,ratio_db20,predicted,predicted_ratio_db10,"
         "gamma_hz,gamma_stderr_hz,predicted_gamma_hz,vth,vth_sigma,flag\n";

  std::vector<double> fx, fy, fs;
  for (std::size_t i = 0; i < nv; ++i) {
    std::vector<double> vals, gammas;
    std::string flag;
    for (std::size_t j = 0; j < ns; ++j) {
      const Cell& c = cells[i * ns + j];
      if (c.ok) {
        vals.push_back(c.value);
        if (std::isfinite(c.gamma_hz)) gammas.push_back(c.gamma_hz);
      } else if (flag.empty()) {
        flag = c.flag;
      }
    }
    if (!vals.empty() && vals.size() < ns) flag = "partial_" + flag;
    if (flag.empty()) flag = "ok";

    const double m = mean_of(vals);
    const double se = vals.size() > 1 ? std::sqrt(variance_of(vals) / static_cast<double>(vals.size())) : kNaN;
    const double gm = mean_of(gammas);
    const double gse = gammas.size() > 1 ? std::sqrt(variance_of(gammas) / static_cast<double>(gammas.size())) : kNaN;

    double gs = kNaN, gfb = kNaN, ratio = kNaN, ratio_se = kNaN, predicted = kNaN, predicted_ratio = kNaN,
           predicted_gamma = kNaN;
    if (plans[i]) {
      const RotatingPlan& p = *plans[i];
      gs = p.gs;
      gfb = p.gfb;
      predicted_gamma = p.g1 / constants::two_pi;
      if (gain_mode) {
        ratio = m;
        ratio_se = se;
        try {
          predicted = analytic::amplitude_gain(p.gs, p.phase);
        } catch (const InstabilityError&) {
          predicted = std::numeric_limits<double>::infinity();
        }
        predicted_ratio = predicted;
      } else {
        const double ref = reference_variance(p);
        ratio = m / ref;
        ratio_se = se / ref;
        predicted_ratio = p.g1 > 0.0 ? p.osc.gamma_m() / p.g1 : std::numeric_limits<double>::infinity();
        predicted = ref * predicted_ratio;
      }
    }
    write_row(out, {"point", num(sw.values[i]), num(gs), num(gfb), std::to_string(vals.size()), num(m), num(se),
                    num(analytic::db10(ratio)), num(analytic::db20(ratio)), num(predicted),
                    num(analytic::db10(predicted_ratio)), num(gm), num(gse), num(predicted_gamma), "", "", flag});
    if (!vals.empty() && std::isfinite(ratio) && ratio > 0.0) {
      fx.push_back(sw.values[i]);
      fy.push_back(ratio);
      fs.push_back(ratio_se);
    }
  }

  // Threshold regression over the aggregated points.
  const ParametricPhase phase = cfg.drive ? cfg.drive->phase : ParametricPhase::deamplify;
  const spectral::ThresholdModel model =
      !gain_mode ? spectral::ThresholdModel::variance
                 : (phase == ParametricPhase::amplify ? spectral::ThresholdModel::gain_amp
                                                      : spectral::ThresholdModel::gain_deamp);
  std::string tflag = "ok";
  double vth = kNaN, vth_sigma = kNaN;
  try {
    const bool use_sigmas = std::all_of(fs.begin(), fs.end(), [](double s) { return std::isfinite(s) && s > 0.0; });
    const auto fit = spectral::fit_threshold(fx, fy, model, use_sigmas ? std::span<const double>(fs) : std::span<const double>());
    vth = fit.vth;
    vth_sigma = fit.uncertainty;
  } catch (const ValidationError&) {
    tflag = "insufficient_data";
  } catch (const std::exception& e) {
    tflag = flag_for(e);
  }
  write_row(out, {"threshold", "", "", "", std::to_string(fx.size()), "", "", "", "", "", "", "", "", "", num(vth),
                  num(vth_sigma), tflag});
}

// --------------------------------------------------------------- simulate

void cmd_simulate(const ExperimentConfig& cfg, const SimulateOutputs& out) {
  if (!out.trace) throw ValidationError("simulate: no output stream");
  const auto seeds = seed_list(cfg.run);
  const OscillatorParams& osc = require_oscillator(cfg);
  const ThermalBath& bath = require_bath(cfg);
  const double gs = resolve_gs(cfg);
  const double gfb = resolve_gfb(cfg, gs);
  const ParametricPhase phase = cfg.drive ? cfg.drive->phase : ParametricPhase::deamplify;
  const double f0 = cfg.drive ? cfg.drive->f0 : 0.0;
  const bool multi = seeds.size() > 1;
  if (multi && out.binary) throw ValidationError("simulate: binary output holds a single seed");

  std::ostream& os = *out.trace;
  if (!out.binary) write_csv_header(os, cfg);
  if (multi) os << "seed,var_a_m2,var_b_m2,divergent\n";

  for (std::uint64_t seed : seeds) {
    switch (cfg.run.simulator) {
      case SimulatorKind::rotating: {
        const RotatingPlan p = plan_rotating(cfg);
        simulate::RotatingOptions opt;
        opt.phase = phase;
        opt.f0 = f0;
        const auto tr = simulate::simulate_rotating(osc, bath, gs, gfb, cfg.readout, p.duration, p.dt, seed, opt);
        if (multi) {
          write_row(os, {std::to_string(seed), num(variance_of(tr.steady_x1())), num(variance_of(tr.steady_x2())),
                         tr.divergent ? "1" : "0"});
        } else if (out.binary) {
          simulate::write_trace_binary(os, tr);
        } else {
          simulate::write_trace_csv(os, tr);
        }
        break;
      }
      case SimulatorKind::position: {
        const double dt = cfg.run.dt.value_or(constants::two_pi / osc.omega_m() / 32.0);
        const double duration = cfg.run.duration.value_or(cfg.run.duration_decays.value_or(100.0) / osc.gamma_m());
        DriveConfig drive;
        drive.f0 = f0;
        drive.phase = phase;
        drive.gs = gs;
        simulate::PositionOptions opt;
        opt.gfb = gfb;
        const auto tr = simulate::simulate_position(osc, bath, drive, kp_from_gs(gs, osc), 2.0 * osc.omega_m(),
                                                    duration, dt, seed, opt);
        if (multi) {
          write_row(os, {std::to_string(seed), num(variance_of(tr.x)), "nan", "0"});
        } else if (out.binary) {
          simulate::write_trace_binary(os, tr);
        } else {
          simulate::write_trace_csv(os, tr);
        }
        break;
      }
      case SimulatorKind::pll: {
        if (!cfg.feedback || !cfg.feedback->pll)
          throw ValidationError("config.feedback.pll: section required by the pll simulator");
        const double dt = cfg.run.dt.value_or(constants::two_pi / osc.omega_m() / 32.0);
        const double duration = cfg.run.duration.value_or(cfg.run.duration_decays.value_or(100.0) / osc.gamma_m());
        DriveConfig drive;
        drive.f0 = f0;
        drive.phase = phase;
        drive.gs = gs;
        simulate::PllOptions opt;
        opt.lockin.bandwidth_hz = cfg.run.lockin_bandwidth.value_or(
            std::min(0.05 * osc.omega_m() / constants::two_pi, 50.0 * osc.gamma_m() / constants::two_pi));
        opt.lockin.sample_rate_hz = cfg.run.lockin_rate.value_or(0.0);
        opt.acquisition_time = cfg.run.acquisition_time.value_or(0.0);
        const auto res = simulate::run_pll(osc, bath, drive, kp_from_gs(gs, osc), *cfg.feedback->pll, duration, dt,
                                           seed, opt);
        const auto& tr = res.quadratures;
        if (multi) {
          write_row(os, {std::to_string(seed), num(variance_of(tr.steady_x1())), num(variance_of(tr.steady_x2())),
                         (tr.divergent || res.lock_lost) ? "1" : "0"});
        } else if (out.binary) {
          simulate::write_trace_binary(os, tr);
        } else {
          simulate::write_trace_csv(os, tr);
        }
        if (out.frequency && !multi) {
          write_csv_header(*out.frequency, cfg);
          write_frequency_csv(*out.frequency, FrequencyRecord{1.0 / tr.dt, res.frequency_hz});
        }
        break;
      }
    }
  }
}

// -------------------------------------------------------------------- fit

namespace {

simulate::QuadratureTrace read_trace_csv(std::istream& in) {
  simulate::QuadratureTrace tr;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  double t0 = kNaN, t1 = kNaN;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "t_s,x1_m,x2_m") throw ValidationError("trace line " + std::to_string(lineno) + ": expected header t_s,x1_m,x2_m");
      header = true;
      continue;
    }
    double v[3];
    std::size_t pos = 0;
    for (int c = 0; c < 3; ++c) {
      const std::size_t end = line.find(',', pos);
      const std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      char* stop = nullptr;
      v[c] = std::strtod(cell.c_str(), &stop);
      if (cell.empty() || *stop != '\0' || (c < 2 && end == std::string::npos) || (c == 2 && end != std::string::npos))
        throw ValidationError("trace line " + std::to_string(lineno) + ": malformed row");
      pos = end + 1;
    }
    if (std::isnan(t0)) t0 = v[0];
    else if (std::isnan(t1)) t1 = v[0];
    tr.x1.push_back(v[1]);
    tr.x2.push_back(v[2]);
  }
  if (!header || tr.x1.size() < 2) throw ValidationError("trace: need a header and at least two rows");
  tr.dt = t1 - t0;
  if (!(tr.dt > 0.0)) throw ValidationError("trace: time column must increase");
  return tr;
}

}  // namespace

void cmd_fit(const ExperimentConfig& cfg, const FitInputs& in, std::ostream* spectrum_out, std::ostream& report) {
  if (in.quadrature != "x1" && in.quadrature != "x2") throw ValidationError("fit: quadrature must be x1 or x2");
  const RotatingPlan p = plan_rotating(cfg);
  simulate::QuadratureTrace tr;
  std::size_t skip = 0;
  if (in.trace_path) {
    const bool binary = in.trace_path->size() >= 4 && in.trace_path->substr(in.trace_path->size() - 4) == ".bin";
    std::ifstream f(*in.trace_path, binary ? std::ios::binary : std::ios::in);
    if (!f) throw ValidationError("fit: cannot open trace " + *in.trace_path);
    if (binary) {
      auto b = simulate::read_trace_binary(f);
      if (b.channels.size() != 2) throw ValidationError("fit: binary trace must hold two quadrature channels");
      tr.dt = b.dt;
      tr.x1 = std::move(b.channels[0]);
      tr.x2 = std::move(b.channels[1]);
    } else {
      tr = read_trace_csv(f);
    }
  } else {
    if (!p.stable()) throw InstabilityError("fit: configured operating point is unstable", kNaN);
    simulate::RotatingOptions opt;
    opt.phase = p.phase;
    opt.f0 = p.f0;
    tr = simulate::simulate_rotating(p.osc, p.bath, p.gs, p.gfb, p.readout, p.duration, p.dt, cfg.run.seed, opt);
    skip = tr.settle_samples;
  }
  const std::vector<double>& x = in.quadrature == "x1" ? tr.x1 : tr.x2;
  const double expected = in.quadrature == "x1" ? p.g1 : p.g2;
  if (!(expected > 0.0)) throw InstabilityError("fit: expected linewidth is not positive", kNaN);
  const auto q = fit_quadrature(std::span<const double>(x).subspan(skip), tr.dt, expected, cfg.run,
                                exclusion_halfwidth(cfg));
  if (spectrum_out) {
    write_csv_header(*spectrum_out, cfg);
    spectral::write_spectrum_csv(*spectrum_out, q.spectrum);
  }
  spectral::write_fit_json(report, q.fit);
}

// -------------------------------------------------------------------- map

void cmd_map(const ExperimentConfig& cfg, MapKind kind, const Grid& gx, const Grid& gy, std::ostream& out) {
  gx.validate("map x grid");
  gy.validate("map y grid");
  const auto xs = gx.values();
  const auto ys = gy.values();
  const std::size_t nx = xs.size();
  const std::size_t ny = ys.size();
  std::vector<double> value(nx * ny, kNaN);
  std::vector<std::string> flag(nx * ny, "ok");
  std::vector<int> side_a(nx * ny, -1);  // snr >= 1, or squeezing >= 56 dB
  std::vector<int> side_b(nx * ny, -1);  // sigma1 below x_zpf

  write_csv_header(out, cfg);
  if (kind == MapKind::squeezing) {
    const OscillatorParams& osc = require_oscillator(cfg);
    if (!cfg.capacitor) throw ValidationError("config.capacitor: section required by the squeezing map");
    const auto map = capdesign::squeezing_map(xs, ys, osc, *cfg.capacitor);
    for (std::size_t k = 0; k < map.cells.size(); ++k) {
      const auto& c = map.cells[k];
      value[k] = c.squeezing_db;
      flag[k] = std::string(capdesign::to_string(c.flag));
      if (c.flag == capdesign::CellFlag::ok) side_a[k] = c.squeezing_db >= 56.0 ? 1 : 0;
    }
    const auto contour = contour_cells(side_a, nx, ny);
    out << "# x vdc_v, y vp_v, value squeezing_db10\n";
    out << "x,y,value,flag,contour_56db\n";
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t k = i * ny + j;
        write_row(out, {num(xs[i]), num(ys[j]), num(value[k]), flag[k], std::to_string(contour[k])});
      }
    return;
  }

  const OscillatorParams& osc = require_oscillator(cfg);
  const ThermalBath& bath = require_bath(cfg);
  if (!cfg.readout) throw ValidationError("config.readout: section required by purity and snr maps");
  const double nbar = bath.nbar(osc.omega_m());
  const double zpf = zero_point_amplitude(osc);
  parallel_for(nx * ny, [&](std::size_t k) {
    const double gs = xs[k / ny];
    QuantumReadout ro = *cfg.readout;
    ro.gamma_qba = ys[k % ny];
    ro.g.reset();
    ro.kappa.reset();
    try {
      const double snr = analytic::detection_snr(gs, nbar, ro);
      const double gopt = analytic::optimal_feedback_gain(gs, nbar, ro);
      const auto v = analytic::quantum_variances(gs, gopt, nbar, ro, zpf);
      value[k] = kind == MapKind::purity ? analytic::purity(v, zpf) : snr;
      side_a[k] = snr >= 1.0 ? 1 : 0;
      side_b[k] = v.sigma1_sq < zpf * zpf ? 1 : 0;
    } catch (const std::exception& e) {
      flag[k] = flag_for(e);
    }
  });
  const auto snr_contour = contour_cells(side_a, nx, ny);
  const auto zpf_contour = contour_cells(side_b, nx, ny);
  out << "# x gs, y gamma_qba, value " << (kind == MapKind::purity ? "purity" : "snr") << " at optimal feedback\n";
  out << "x,y,value,flag,snr_contour,zpf_contour\n";
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t k = i * ny + j;
      write_row(out, {num(xs[i]), num(ys[j]), num(value[k]), flag[k], std::to_string(snr_contour[k]),
                      std::to_string(zpf_contour[k])});
    }
}

// ------------------------------------------------------------------ allan

FrequencyRecord read_frequency_csv(std::istream& in) {
  FrequencyRecord rec;
  std::string line;
  std::size_t lineno = 0;
  int columns = 0;
  double t0 = kNaN, t1 = kNaN;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("sample_rate_hz=");
      if (pos != std::string::npos) {
        char* stop = nullptr;
        const std::string v = line.substr(pos + 15);
        rec.sample_rate = std::strtod(v.c_str(), &stop);
        if (v.empty() || *stop != '\0' || !(rec.sample_rate > 0.0))
          throw ValidationError("frequency file line " + std::to_string(lineno) + ": bad sample rate");
      }
      continue;
    }
    if (columns == 0) {
      if (line == "f_hz") columns = 1;
      else if (line == "t_s,f_hz") columns = 2;
      else throw ValidationError("frequency file line " + std::to_string(lineno) + ": expected header f_hz or t_s,f_hz");
      continue;
    }
    std::string cell = line;
    if (columns == 2) {
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw ValidationError("frequency file line " + std::to_string(lineno) + ": expected two columns");
      const std::string t = line.substr(0, comma);
      char* stop = nullptr;
      const double tv = std::strtod(t.c_str(), &stop);
      if (t.empty() || *stop != '\0') throw ValidationError("frequency file line " + std::to_string(lineno) + ": bad time");
      if (std::isnan(t0)) t0 = tv;
      else if (std::isnan(t1)) t1 = tv;
      cell = line.substr(comma + 1);
    }
    char* stop = nullptr;
    const double f = std::strtod(cell.c_str(), &stop);
    if (cell.empty() || *stop != '\0' || !std::isfinite(f))
      throw ValidationError("frequency file line " + std::to_string(lineno) + ": bad frequency value '" + cell + "'");
    rec.f_hz.push_back(f);
  }
  if (columns == 0) throw ValidationError("frequency file: missing header");
  if (!(rec.sample_rate > 0.0)) {
    if (columns == 2 && t1 > t0) rec.sample_rate = 1.0 / (t1 - t0);
    else throw ValidationError("frequency file: missing '# sample_rate_hz=' header");
  }
  return rec;
}

void write_frequency_csv(std::ostream& os, const FrequencyRecord& rec) {
  os << "# sample_rate_hz=" << detail::num_exact(rec.sample_rate) << '\n';
  os << "f_hz\n";
  for (double f : rec.f_hz) os << detail::num_exact(f) << '\n';
}

std::vector<double> default_taus(std::size_t n_samples, double sample_rate) {
  std::vector<double> taus;
  for (std::size_t decade = 1; decade <= n_samples; decade *= 10) {
    for (std::size_t m : {1, 2, 5}) {
      const std::size_t w = m * decade;
      if (n_samples / w >= 3) taus.push_back(static_cast<double>(w) / sample_rate);
    }
    if (decade > n_samples / 10) break;
  }
  return taus;
}

void cmd_allan(const ExperimentConfig* cfg, const FrequencyRecord& rec, double f0, std::span<const double> taus,
               std::ostream& out) {
  std::vector<double> t(taus.begin(), taus.end());
  if (t.empty()) t = default_taus(rec.f_hz.size(), rec.sample_rate);
  if (t.empty()) throw ValidationError("allan: too few samples for any averaging time");
  const auto dev = spectral::allan_deviation(rec.f_hz, f0, t, rec.sample_rate);
  if (cfg) {
    write_csv_header(out, *cfg);
  } else {
    out << "# squeezesim " << version() << "\n# config_hash none\n# seeds none\n";
  }
  out << "tau_s,allan_dev\n";
  for (std::size_t i = 0; i < t.size(); ++i) write_row(out, {num(t[i]), num(dev[i])});
}

}  // namespace squeezesim::cli
