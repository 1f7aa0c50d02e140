#include "squeezesim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/simulate.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace squeezesim::cli {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- TOML bridge

json toml_to_json(const toml::node& node, const std::string& path);

json toml_table_to_json(const toml::table& t, const std::string& path) {
  json out = json::object();
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    out[key] = toml_to_json(v, path.empty() ? key : path + "." + key);
  }
  return out;
}

json toml_to_json(const toml::node& node, const std::string& path) {
  if (const auto* t = node.as_table()) return toml_table_to_json(*t, path);
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& e : *a) out.push_back(toml_to_json(e, path));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw ValidationError(path + ": unsupported TOML value type (dates and times are not used)");
}

toml::table json_to_toml_table(const json& j);

void insert_toml(toml::table& t, const std::string& key, const json& v) {
  if (v.is_object()) {
    t.insert(key, json_to_toml_table(v));
  } else if (v.is_array()) {
    toml::array a;
    for (const auto& e : v) {
      if (e.is_number_integer()) a.push_back(e.get<std::int64_t>());
      else if (e.is_number()) a.push_back(e.get<double>());
      else if (e.is_string()) a.push_back(e.get<std::string>());
      else throw ValidationError("cannot serialise nested array value");
    }
    t.insert(key, std::move(a));
  } else if (v.is_boolean()) {
    t.insert(key, v.get<bool>());
  } else if (v.is_number_integer()) {
    t.insert(key, v.get<std::int64_t>());
  } else if (v.is_number()) {
    t.insert(key, v.get<double>());
  } else if (v.is_string()) {
    t.insert(key, v.get<std::string>());
  }
}

toml::table json_to_toml_table(const json& j) {
  toml::table t;
  for (const auto& [k, v] : j.items()) insert_toml(t, k, v);
  return t;
}

// ------------------------------------------------------------ section reader

class Section {
public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(path_ + ": expected a table");
  }

  std::string field(std::string_view key) const { return path_ + "." + std::string(key); }

  bool has(const std::string& key) const { return obj_.contains(key); }

  std::optional<double> number(const std::string& key) {
    if (!obj_.contains(key)) return std::nullopt;
    used_.insert(key);
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ValidationError(field(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(field(key) + ": must be finite");
    return d;
  }

  /// One of several unit-suffixed spellings of the same quantity, in SI.
  std::optional<double> quantity(std::initializer_list<std::pair<const char*, double>> spellings) {
    std::optional<double> out;
    std::string seen;
    for (const auto& [key, factor] : spellings) {
      if (auto v = number(key)) {
        if (out) throw ValidationError(path_ + ": both " + seen + " and " + key + " given");
        out = *v * factor;
        seen = key;
      }
    }
    return out;
  }

  std::optional<std::string> string(const std::string& key) {
    if (!obj_.contains(key)) return std::nullopt;
    used_.insert(key);
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ValidationError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    if (!obj_.contains(key)) return std::nullopt;
    used_.insert(key);
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) throw ValidationError(field(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    if (!obj_.contains(key)) return std::nullopt;
    used_.insert(key);
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ValidationError(field(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ValidationError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::optional<Section> table(const std::string& key) {
    if (!obj_.contains(key)) return std::nullopt;
    used_.insert(key);
    return Section(obj_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!used_.count(k)) throw ValidationError(field(k) + ": unknown key");
    }
  }

  void mark(const std::string& key) { used_.insert(key); }

  const std::string& path() const { return path_; }

private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

double require(const std::optional<double>& v, const std::string& what) {
  if (!v) throw ValidationError(what + ": missing");
  return *v;
}

void check_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ValidationError(what + ": must be > 0");
}

void check_nonnegative(double v, const std::string& what) {
  if (!(v >= 0.0)) throw ValidationError(what + ": must be >= 0");
}

ParametricPhase parse_phase(const std::string& s, const std::string& where) {
  if (s == "deamplify") return ParametricPhase::deamplify;
  if (s == "amplify") return ParametricPhase::amplify;
  throw ValidationError(where + ": expected 'deamplify' or 'amplify', got '" + s + "'");
}

OscillatorParams read_oscillator(Section s) {
  const double m = require(s.quantity({{"mass_kg", 1.0}, {"mass_g", 1e-3}, {"mass_ng", 1e-12}, {"mass_pg", 1e-15}}),
                           s.path() + ".mass_kg");
  const auto f = s.quantity({{"frequency_hz", constants::two_pi},
                             {"frequency_khz", constants::two_pi * 1e3},
                             {"frequency_mhz", constants::two_pi * 1e6},
                             {"omega_rad_s", 1.0}});
  const double w = require(f, s.path() + ".frequency_hz");
  const auto q = s.number("q");
  const auto gamma = s.quantity({{"gamma_rad_s", 1.0}, {"linewidth_hz", constants::two_pi}});
  if (q && gamma) throw ValidationError(s.path() + ": give either q or a damping rate, not both");
  if (!q && !gamma) throw ValidationError(s.path() + ".q: missing");
  check_positive(m, s.field("mass_kg"));
  check_positive(w, s.field("frequency_hz"));
  if (q) check_positive(*q, s.field("q"));
  if (gamma) check_positive(*gamma, s.field("gamma_rad_s"));
  s.finish();
  return q ? OscillatorParams::from_q(m, w, *q) : OscillatorParams::from_damping(m, w, *gamma);
}

ThermalBath read_bath(Section s) {
  ThermalBath b;
  b.temperature = require(s.quantity({{"temperature_k", 1.0}, {"temperature_mk", 1e-3}}), s.field("temperature_k"));
  check_nonnegative(b.temperature, s.field("temperature_k"));
  s.finish();
  return b;
}

DriveSpec read_drive(Section s) {
  DriveSpec d;
  if (auto p = s.string("phase")) d.phase = parse_phase(*p, s.field("phase"));
  d.f0 = s.quantity({{"f0_n", 1.0}, {"f0_pn", 1e-12}, {"f0_fn", 1e-15}}).value_or(0.0);
  d.gs = s.number("gs");
  d.vp = s.quantity({{"vp_v", 1.0}, {"vp_mv", 1e-3}});
  d.vth = s.quantity({{"vth_v", 1.0}, {"vth_mv", 1e-3}});
  d.kp = s.quantity({{"kp_n_per_m", 1.0}});
  const int given = (d.gs ? 1 : 0) + (d.vp ? 1 : 0) + (d.kp ? 1 : 0);
  if (given > 1) throw ValidationError(s.path() + ": give exactly one of gs, vp_v, kp_n_per_m");
  if (d.gs) check_nonnegative(*d.gs, s.field("gs"));
  if (d.vp) check_nonnegative(*d.vp, s.field("vp_v"));
  if (d.vth) check_positive(*d.vth, s.field("vth_v"));
  if (d.kp) check_nonnegative(*d.kp, s.field("kp_n_per_m"));
  s.finish();
  return d;
}

FeedbackSpec read_feedback(Section s) {
  FeedbackSpec f;
  f.gfb = s.number("gfb");
  f.gfb_per_gs = s.number("gfb_per_gs");
  if (f.gfb && f.gfb_per_gs) throw ValidationError(s.path() + ": give either gfb or gfb_per_gs");
  if (f.gfb) check_nonnegative(*f.gfb, s.field("gfb"));
  if (f.gfb_per_gs) check_nonnegative(*f.gfb_per_gs, s.field("gfb_per_gs"));
  if (auto p = s.table("pll")) {
    PllSettings pll;
    pll.proportional_hz_per_rad = require(p->number("proportional_hz_per_rad"), p->field("proportional_hz_per_rad"));
    pll.integral_hz_per_rad_s = p->number("integral_hz_per_rad_s").value_or(0.0);
    pll.bandwidth_hz = require(p->number("bandwidth_hz"), p->field("bandwidth_hz"));
    check_positive(pll.bandwidth_hz, p->field("bandwidth_hz"));
    p->finish();
    f.pll = pll;
  }
  s.finish();
  return f;
}

QuantumReadout read_readout(Section s, const std::optional<OscillatorParams>& osc) {
  const auto gamma_qba = s.number("gamma_qba");
  const auto g = s.quantity({{"g_rad_s", 1.0}, {"g_hz", constants::two_pi}});
  const auto kappa = s.quantity({{"kappa_rad_s", 1.0}, {"kappa_hz", constants::two_pi}});
  const double eta = s.number("eta_det").value_or(1.0);
  s.finish();
  if (gamma_qba && (g || kappa)) throw ValidationError(s.path() + ": give either gamma_qba or g and kappa");
  QuantumReadout r;
  if (g || kappa) {
    if (!g || !kappa) throw ValidationError(s.path() + ": g and kappa must be given together");
    if (!osc) throw ValidationError(s.path() + ": g and kappa need the oscillator section");
    check_positive(*kappa, s.field("kappa_rad_s"));
    r = QuantumReadout::from_coupling(*g, *kappa, eta, *osc);
  } else {
    r.gamma_qba = require(gamma_qba, s.field("gamma_qba"));
    r.eta_det = eta;
  }
  try {
    r.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()));
  }
  return r;
}

capdesign::CapacitorGeometry read_capacitor(Section s) {
  capdesign::CapacitorGeometry c;
  c.alpha = require(s.quantity({{"alpha_f_m", 1.0}, {"alpha_pf_nm", 1e-21}}), s.field("alpha_f_m"));
  c.c0 = s.quantity({{"c0_f", 1.0}, {"c0_pf", 1e-12}, {"c0_ff", 1e-15}}).value_or(0.0);
  c.d0 = require(s.quantity({{"d0_m", 1.0}, {"d0_um", 1e-6}, {"d0_nm", 1e-9}}), s.field("d0_m"));
  c.vdc = s.quantity({{"vdc_v", 1.0}}).value_or(0.0);
  c.vp = s.quantity({{"vp_v", 1.0}, {"vp_mv", 1e-3}}).value_or(0.0);
  s.finish();
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()));
  }
  return c;
}

Grid read_grid(const json& v, const std::string& where) {
  if (v.is_string()) {
    try {
      return parse_grid(v.get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  Section s(v, where);
  Grid g;
  g.min = require(s.number("min"), s.field("min"));
  g.max = require(s.number("max"), s.field("max"));
  const auto n = s.integer("n");
  if (!n || *n < 1) throw ValidationError(s.field("n") + ": must be an integer >= 1");
  g.n = static_cast<std::size_t>(*n);
  const auto spacing = s.string("spacing").value_or("lin");
  if (spacing != "lin" && spacing != "log") throw ValidationError(s.field("spacing") + ": expected 'lin' or 'log'");
  g.log = spacing == "log";
  s.finish();
  g.validate(where);
  return g;
}

SweepSpec read_sweep(Section s, const json& raw) {
  SweepSpec w;
  w.variable = s.string("variable").value_or("");
  if (w.variable.empty()) throw ValidationError(s.field("variable") + ": missing");
  const auto values = s.numbers("values");
  std::optional<Grid> grid;
  if (raw.contains("grid")) {
    s.mark("grid");
    grid = read_grid(raw.at("grid"), s.field("grid"));
  }
  if (values && grid) throw ValidationError(s.path() + ": give either values or grid");
  if (values) w.values = *values;
  if (grid) w.values = grid->values();
  if (w.values.empty()) throw ValidationError(s.field("values") + ": sweep needs at least one value");
  if (auto o = s.string("observable")) {
    if (*o == "variance") w.observable = Observable::variance;
    else if (*o == "gain") w.observable = Observable::gain;
    else throw ValidationError(s.field("observable") + ": expected 'variance' or 'gain'");
  }
  s.finish();
  // Probe the path once so typos fail at load time.
  ExperimentConfig probe;
  probe.drive = DriveSpec{};
  probe.feedback = FeedbackSpec{};
  probe.bath = ThermalBath{};
  probe.readout = QuantumReadout{};
  probe.capacitor = capdesign::CapacitorGeometry{};
  probe.oscillator = OscillatorParams::from_q(1.0, 1.0, 10.0);
  try {
    apply_sweep_value(probe, w.variable, w.values.front());
  } catch (const ValidationError& e) {
    throw ValidationError(s.field("variable") + ": " + e.what());
  }
  return w;
}

RunSpec read_run(Section s) {
  RunSpec r;
  if (auto sim = s.string("simulator")) {
    if (*sim == "rotating") r.simulator = SimulatorKind::rotating;
    else if (*sim == "position") r.simulator = SimulatorKind::position;
    else if (*sim == "pll") r.simulator = SimulatorKind::pll;
    else throw ValidationError(s.field("simulator") + ": expected 'rotating', 'position' or 'pll'");
  }
  r.duration = s.quantity({{"duration_s", 1.0}});
  r.duration_decays = s.number("duration_decays");
  if (r.duration && r.duration_decays) throw ValidationError(s.path() + ": give either duration_s or duration_decays");
  r.dt = s.quantity({{"dt_s", 1.0}});
  if (auto seed = s.integer("seed")) {
    if (*seed < 0) throw ValidationError(s.field("seed") + ": must be >= 0");
    r.seed = static_cast<std::uint64_t>(*seed);
  }
  if (auto n = s.integer("seeds")) {
    if (*n < 1) throw ValidationError(s.field("seeds") + ": seed list must not be empty");
    r.seeds = static_cast<std::size_t>(*n);
  }
  r.bins_per_linewidth = s.number("bins_per_linewidth").value_or(30.0);
  r.fit_span_linewidths = s.number("fit_span_linewidths").value_or(20.0);
  r.exclude_halfwidth = s.quantity({{"exclude_halfwidth_hz", 1.0}});
  r.lockin_bandwidth = s.quantity({{"lockin_bandwidth_hz", 1.0}});
  r.lockin_rate = s.quantity({{"lockin_rate_hz", 1.0}});
  r.acquisition_time = s.quantity({{"acquisition_time_s", 1.0}});
  if (r.duration) check_positive(*r.duration, s.field("duration_s"));
  if (r.duration_decays) check_positive(*r.duration_decays, s.field("duration_decays"));
  if (r.dt) check_positive(*r.dt, s.field("dt_s"));
  check_positive(r.bins_per_linewidth, s.field("bins_per_linewidth"));
  check_positive(r.fit_span_linewidths, s.field("fit_span_linewidths"));
  if (r.exclude_halfwidth) check_nonnegative(*r.exclude_halfwidth, s.field("exclude_halfwidth_hz"));
  if (r.lockin_bandwidth) check_positive(*r.lockin_bandwidth, s.field("lockin_bandwidth_hz"));
  if (r.lockin_rate) check_positive(*r.lockin_rate, s.field("lockin_rate_hz"));
  if (r.acquisition_time) check_nonnegative(*r.acquisition_time, s.field("acquisition_time_s"));
  s.finish();
  return r;
}

MapSpec read_map(Section s, const json& raw) {
  MapSpec m;
  if (auto k = s.string("kind")) {
    try {
      m.kind = parse_map_kind(*k);
    } catch (const ValidationError& e) {
      throw ValidationError(s.field("kind") + ": " + e.what());
    }
  }
  for (const char* axis : {"x", "y"}) {
    if (!raw.contains(axis)) continue;
    s.mark(axis);
    (std::string(axis) == "x" ? m.x : m.y) = read_grid(raw.at(axis), s.field(axis));
  }
  s.finish();
  return m;
}

ExperimentConfig from_json(const json& root) {
  Section top(root, "config");
  ExperimentConfig cfg;
  if (auto s = top.table("oscillator")) cfg.oscillator = read_oscillator(*s);
  if (auto s = top.table("bath")) cfg.bath = read_bath(*s);
  if (auto s = top.table("drive")) cfg.drive = read_drive(*s);
  if (auto s = top.table("feedback")) cfg.feedback = read_feedback(*s);
  if (auto s = top.table("readout")) cfg.readout = read_readout(*s, cfg.oscillator);
  if (auto s = top.table("capacitor")) cfg.capacitor = read_capacitor(*s);
  if (auto s = top.table("sweep")) cfg.sweep = read_sweep(*s, root.at("sweep"));
  if (auto s = top.table("map")) cfg.map = read_map(*s, root.at("map"));
  if (auto s = top.table("run")) cfg.run = read_run(*s);
  top.finish();
  return cfg;
}

json to_json_value(const ExperimentConfig& cfg) {
  json j = json::object();
  if (cfg.oscillator) {
    j["oscillator"] = {{"mass_kg", cfg.oscillator->mass()},
                       {"omega_rad_s", cfg.oscillator->omega_m()},
                       {"gamma_rad_s", cfg.oscillator->gamma_m()}};
  }
  if (cfg.bath) j["bath"] = {{"temperature_k", cfg.bath->temperature}};
  if (cfg.drive) {
    json d = {{"phase", std::string(to_string(cfg.drive->phase))}, {"f0_n", cfg.drive->f0}};
    if (cfg.drive->gs) d["gs"] = *cfg.drive->gs;
    if (cfg.drive->vp) d["vp_v"] = *cfg.drive->vp;
    if (cfg.drive->vth) d["vth_v"] = *cfg.drive->vth;
    if (cfg.drive->kp) d["kp_n_per_m"] = *cfg.drive->kp;
    j["drive"] = d;
  }
  if (cfg.feedback) {
    json f = json::object();
    if (cfg.feedback->gfb) f["gfb"] = *cfg.feedback->gfb;
    if (cfg.feedback->gfb_per_gs) f["gfb_per_gs"] = *cfg.feedback->gfb_per_gs;
    if (cfg.feedback->pll) {
      f["pll"] = {{"proportional_hz_per_rad", cfg.feedback->pll->proportional_hz_per_rad},
                  {"integral_hz_per_rad_s", cfg.feedback->pll->integral_hz_per_rad_s},
                  {"bandwidth_hz", cfg.feedback->pll->bandwidth_hz}};
    }
    j["feedback"] = f;
  }
  if (cfg.readout) {
    json r = {{"eta_det", cfg.readout->eta_det}};
    if (cfg.readout->g && cfg.readout->kappa) {
      r["g_rad_s"] = *cfg.readout->g;
      r["kappa_rad_s"] = *cfg.readout->kappa;
    } else {
      r["gamma_qba"] = cfg.readout->gamma_qba;
    }
    j["readout"] = r;
  }
  if (cfg.capacitor) {
    j["capacitor"] = {{"alpha_f_m", cfg.capacitor->alpha}, {"c0_f", cfg.capacitor->c0},
                      {"d0_m", cfg.capacitor->d0},         {"vdc_v", cfg.capacitor->vdc},
                      {"vp_v", cfg.capacitor->vp}};
  }
  if (cfg.sweep) {
    j["sweep"] = {{"variable", cfg.sweep->variable},
                  {"values", cfg.sweep->values},
                  {"observable", std::string(to_string(cfg.sweep->observable))}};
  }
  if (cfg.map) {
    json m = {{"kind", std::string(to_string(cfg.map->kind))}};
    if (cfg.map->x) m["x"] = to_string(*cfg.map->x);
    if (cfg.map->y) m["y"] = to_string(*cfg.map->y);
    j["map"] = m;
  }
  const RunSpec& r = cfg.run;
  json run = {{"simulator", std::string(to_string(r.simulator))},
              {"seed", static_cast<std::int64_t>(r.seed)},
              {"seeds", static_cast<std::int64_t>(r.seeds)},
              {"bins_per_linewidth", r.bins_per_linewidth},
              {"fit_span_linewidths", r.fit_span_linewidths}};
  if (r.duration) run["duration_s"] = *r.duration;
  if (r.duration_decays) run["duration_decays"] = *r.duration_decays;
  if (r.dt) run["dt_s"] = *r.dt;
  if (r.exclude_halfwidth) run["exclude_halfwidth_hz"] = *r.exclude_halfwidth;
  if (r.lockin_bandwidth) run["lockin_bandwidth_hz"] = *r.lockin_bandwidth;
  if (r.lockin_rate) run["lockin_rate_hz"] = *r.lockin_rate;
  if (r.acquisition_time) run["acquisition_time_s"] = *r.acquisition_time;
  j["run"] = run;
  return j;
}

}  // namespace

// ------------------------------------------------------------------- public

ExperimentConfig parse_config(std::string_view text, ConfigFormat format) {
  json root;
  if (format == ConfigFormat::json) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config: JSON syntax error: ") + e.what());
    }
  } else {
    try {
      root = toml_table_to_json(toml::parse(text), "");
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << "config: TOML syntax error at line " << e.source().begin.line << ": " << e.description();
      throw ValidationError(msg.str());
    }
  }
  return from_json(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto fmt = path.extension() == ".json" ? ConfigFormat::json : ConfigFormat::toml;
  return parse_config(buf.str(), fmt);
}

std::string to_json(const ExperimentConfig& cfg) { return to_json_value(cfg).dump(2) + "\n"; }

std::string to_toml(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << json_to_toml_table(to_json_value(cfg)) << '\n';
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = to_json_value(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const OscillatorParams& require_oscillator(const ExperimentConfig& cfg) {
  if (!cfg.oscillator) throw ValidationError("config.oscillator: section required by this command");
  return *cfg.oscillator;
}

const ThermalBath& require_bath(const ExperimentConfig& cfg) {
  if (!cfg.bath) throw ValidationError("config.bath: section required by this command");
  return *cfg.bath;
}

double resolve_gs(const ExperimentConfig& cfg) {
  if (!cfg.drive) return 0.0;
  const DriveSpec& d = *cfg.drive;
  if (d.gs) return *d.gs;
  if (d.kp) return gs_from_kp(*d.kp, require_oscillator(cfg));
  if (d.vp) {
    if (d.vth) return *d.vp / *d.vth;
    if (cfg.capacitor) {
      const OscillatorParams& osc = require_oscillator(cfg);
      const double x_eq = capdesign::static_equilibrium(osc, *cfg.capacitor, cfg.capacitor->vdc);
      return *d.vp / capdesign::threshold_voltage(osc, *cfg.capacitor, x_eq);
    }
    throw ValidationError("config.drive.vp_v: needs drive.vth_v or a capacitor section");
  }
  return 0.0;
}

double resolve_gfb(const ExperimentConfig& cfg, double gs) {
  if (!cfg.feedback) return 0.0;
  const FeedbackSpec& f = *cfg.feedback;
  if (f.gfb) return *f.gfb;
  if (f.gfb_per_gs) return *f.gfb_per_gs * gs;
  if (f.pll) return simulate::pll_feedback_rate(*f.pll) / require_oscillator(cfg).gamma_m();
  return 0.0;
}

void apply_sweep_value(ExperimentConfig& cfg, std::string_view path, double value) {
  if (!std::isfinite(value)) throw ValidationError("sweep value must be finite");
  auto need = [&](bool present, const char* section) {
    if (!present) throw ValidationError(std::string("sweeping ") + std::string(path) + " needs a " + section + " section");
  };
  if (path == "drive.gs" || path == "drive.vp_v" || path == "drive.kp_n_per_m" || path == "drive.f0_n") {
    need(cfg.drive.has_value(), "drive");
    DriveSpec& d = *cfg.drive;
    if (path == "drive.f0_n") {
      d.f0 = value;
      return;
    }
    if (value < 0.0) throw ValidationError(std::string(path) + " must be >= 0");
    d.gs.reset();
    d.vp.reset();
    d.kp.reset();
    if (path == "drive.gs") d.gs = value;
    else if (path == "drive.vp_v") d.vp = value;
    else d.kp = value;
  } else if (path == "feedback.gfb" || path == "feedback.gfb_per_gs") {
    if (!cfg.feedback) cfg.feedback = FeedbackSpec{};
    if (value < 0.0) throw ValidationError(std::string(path) + " must be >= 0");
    cfg.feedback->gfb.reset();
    cfg.feedback->gfb_per_gs.reset();
    (path == "feedback.gfb" ? cfg.feedback->gfb : cfg.feedback->gfb_per_gs) = value;
  } else if (path == "bath.temperature_k") {
    need(cfg.bath.has_value(), "bath");
    if (value < 0.0) throw ValidationError("bath.temperature_k must be >= 0");
    cfg.bath->temperature = value;
  } else if (path == "oscillator.q") {
    need(cfg.oscillator.has_value(), "oscillator");
    if (!(value > 0.0)) throw ValidationError("oscillator.q must be > 0");
    cfg.oscillator = OscillatorParams::from_q(cfg.oscillator->mass(), cfg.oscillator->omega_m(), value);
  } else if (path == "readout.gamma_qba" || path == "readout.eta_det") {
    need(cfg.readout.has_value(), "readout");
    if (path == "readout.gamma_qba") {
      cfg.readout->gamma_qba = value;
      cfg.readout->g.reset();
      cfg.readout->kappa.reset();
    } else {
      cfg.readout->eta_det = value;
    }
    cfg.readout->validate();
  } else if (path == "capacitor.vdc_v" || path == "capacitor.vp_v") {
    need(cfg.capacitor.has_value(), "capacitor");
    (path == "capacitor.vdc_v" ? cfg.capacitor->vdc : cfg.capacitor->vp) = value;
    cfg.capacitor->validate();
  } else {
    throw ValidationError("unknown sweep variable '" + std::string(path) + "'");
  }
}

std::string_view to_string(ParametricPhase p) {
  return p == ParametricPhase::amplify ? "amplify" : "deamplify";
}

std::string_view to_string(Observable o) { return o == Observable::gain ? "gain" : "variance"; }

std::string_view to_string(SimulatorKind s) {
  switch (s) {
    case SimulatorKind::rotating: return "rotating";
    case SimulatorKind::position: return "position";
    case SimulatorKind::pll: return "pll";
  }
  return "rotating";
}

std::string_view to_string(MapKind k) {
  switch (k) {
    case MapKind::purity: return "purity";
    case MapKind::snr: return "snr";
    case MapKind::squeezing: return "squeezing";
  }
  return "purity";
}

MapKind parse_map_kind(std::string_view s) {
  if (s == "purity") return MapKind::purity;
  if (s == "snr") return MapKind::snr;
  if (s == "squeezing") return MapKind::squeezing;
  throw ValidationError("map kind must be purity, snr or squeezing, got '" + std::string(s) + "'");
}

}  // namespace squeezesim::cli
