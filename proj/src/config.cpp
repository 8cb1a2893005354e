#include "homeoscale/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "homeoscale/errors.h"

namespace homeoscale {

namespace {

using json = nlohmann::json;

constexpr KeyInfo kKeys[] = {
    {"device.u_t", "0.0258", "thermal voltage U_T (V)", true},
    {"device.kappa", "0.7", "subthreshold slope coefficient", true},
    {"device.i0", "1e-16", "subthreshold prefactor I0 (A)", true},
    {"device.vdd", "1.8", "supply voltage (V)", true},
    {"leakage.c_f", "1e-12", "ramp capacitor C_F (F)", true},
    {"leakage.anchors", "[[1.42, 60 s point], [1.72, 1.5e-6, 0.45e-6]]",
     "calibration anchors [[v_g, slope_up, slope_down], ...] (V, V/s)", false},
    {"leakage.i_parasitic_up", "0", "extra leakage while ramping up (A, <= 1e-19)", true},
    {"leakage.i_parasitic_down", "0", "extra leakage while ramping down (A, <= 1e-19)", true},
    {"dpi.c_dpi", "1e-12", "DPI capacitor (F)", true},
    {"dpi.i_tau", "1e-11", "DPI leak current I_tau (A)", true},
    {"synapses.weights", "[]", "weight currents I_wi (A)", false},
    {"synapses.pulse_width", "0.001", "input pulse width (s)", true},
    {"synapses.i_dc", "0", "DC test current (A); pre-step value for step protocols", true},
    {"neuron.q_th", "1.7777777777777777e-10", "charge to threshold (C)", true},
    {"neuron.rho", "0.0011111111111111111", "refractory period (s)", true},
    {"neuron.i_leak", "0", "membrane leak (A)", true},
    {"neuron.adapt_q", "0", "threshold increment per spike (C)", true},
    {"neuron.adapt_tau", "1", "threshold increment decay (s)", true},
    {"neuron.rate_window", "1", "rate estimate averaging window (s)", true},
    {"neuron.calibrate", "null", "two [current, rate] points replacing q_th and rho", false},
    {"agc.i_ref", "2e-08", "reference current I_REF (A)", true},
    {"agc.v_ref_h", "1.384", "V_REF_H (V)", true},
    {"agc.v_ref_m", "1.382", "V_REF_M (V)", true},
    {"agc.v_ref_l", "1.38", "V_REF_L (V)", true},
    {"agc.hysteresis_eps", "0.001", "relative comparator deadband", true},
    {"agc.v_g", "1.42", "leakage-cell gate voltage selecting the slopes (V)", true},
    {"agc.slope_up", "null", "explicit up slope (V/s), replaces the calibration", true},
    {"agc.slope_down", "null", "explicit down slope (V/s), replaces the calibration", true},
    {"engine.gain_drift_eta", "0.001", "max relative I_gain change per segment", true},
    {"engine.sample_interval", "0.01", "trace sample interval (s)", true},
    {"engine.max_segment", "1", "max segment length (s)", true},
    {"experiment.protocol", "custom", "custom, fig6, fig7, fig8, fig9, fig10, fig11, fig12", false},
    {"experiment.name", "null", "label written to the metadata (defaults to the protocol)", false},
    {"experiment.horizon", "0", "simulated time (s)", true},
    {"experiment.dc_schedule", "[]", "[[t, i_dc], ...] (s, A)", false},
    {"experiment.spike_inputs", "[]", "[[synapse, rate], ...] or [[synapse, [t, ...]], ...]", false},
    {"experiment.weight_schedule", "[]", "[[t, synapse, weight], ...] (s, -, A)", false},
    {"experiment.teacher_current", "0", "constant current added to the neuron drive (A)", true},
    {"experiment.disturbance", "null", "[t, duration, factor] scaling the drive", false},
    {"experiment.pinned_sw", "null", "0 or 1 to run open loop with SW fixed", false},
    {"experiment.start_locked", "true", "start with V_THR settled so that I_syn = I_REF", false},
    {"experiment.spike_mode", "analytic", "analytic (rate law) or exact (spike events)", false},
    {"experiment.t_step", "null", "step time (s); step protocols", true},
    {"experiment.t_back", "null", "step-back time (s); step protocols", true},
    {"experiment.i_dc_post", "null", "post-step I_DC (A); step protocols", true},
    {"experiment.recovery_target", "null",
     "recovery time (s) setting both slopes for the step; step protocols", true},
    {"experiment.excursion", "0.01", "V_THR excursion of a slope run (V); fig9", true},
    {"experiment.step_ratio", "2", "drive ratio pre/post; fig10", true},
    {"experiment.n_synapses", "6", "synapse count; learning protocols", true},
    {"experiment.potentiation", "[]", "[[t, [synapse, ...]], ...]; learning protocols", false},
    {"experiment.depress_all_at", "null", "time all synapses return to depressed (s)", true},
    {"experiment.input_rate", "100", "Poisson input rate per synapse (Hz)", true},
    {"experiment.teacher_rate", "80", "rate the teacher holds at I_syn = I_REF (Hz)", true},
    {"experiment.w_potentiated", "1e-09", "potentiated weight (A)", true},
    {"experiment.w_depressed", "5e-11", "depressed weight (A)", true},
};

const char* const kStepKeys[] = {"experiment.t_step", "experiment.t_back", "experiment.i_dc_post",
                                 "experiment.recovery_target"};
const char* const kSlopeKeys[] = {"experiment.excursion"};
const char* const kLongKeys[] = {"experiment.step_ratio"};
const char* const kLearningKeys[] = {
    "experiment.n_synapses",   "experiment.potentiation",  "experiment.depress_all_at",
    "experiment.input_rate",   "experiment.teacher_rate",  "experiment.w_potentiated",
    "experiment.w_depressed"};

constexpr std::string_view kProtocolText[][2] = {
    {"custom", ""},
    {"fig6",
     "[synapses]\ni_dc = 3e-10\n"
     "[neuron]\ncalibrate = [[2e-8, 100], [4e-8, 180]]\n"
     "[agc]\ni_ref = 2e-8\nv_g = 1.42\n"
     "[experiment]\nhorizon = 200\nt_step = 20\nt_back = 120\ni_dc_post = 6e-10\n"
     "recovery_target = 60\n"},
    {"fig7",
     "[synapses]\ni_dc = 7.5e-10\n"
     "[neuron]\ncalibrate = [[2e-8, 150], [6.666666666666667e-8, 475]]\n"
     "[agc]\ni_ref = 2e-8\n"
     "[experiment]\nhorizon = 300\nt_step = 60\ni_dc_post = 2.5e-9\nrecovery_target = 75\n"},
    {"fig8",
     "[synapses]\ni_dc = 3e-10\n"
     "[neuron]\ncalibrate = [[2e-8, 100], [4e-8, 180]]\n"
     "[agc]\ni_ref = 2e-8\n"
     "[experiment]\nhorizon = 900\nt_step = 50\nt_back = 500\ni_dc_post = 6e-10\n"
     "recovery_target = 300\n"},
    {"fig9",
     "[agc]\nv_g = 1.72\n"
     "[experiment]\npinned_sw = 1\nstart_locked = false\n"},
    {"fig10",
     "[synapses]\ni_dc = 3e-10\n"
     "[agc]\nv_g = 1.72\n"
     "[engine]\nsample_interval = 10\nmax_segment = 100\n"
     "[experiment]\nhorizon = 144000\nstep_ratio = 2\n"},
    {"fig11",
     "[dpi]\ni_tau = 4e-13\n"
     "[agc]\ni_ref = 1e-8\nslope_up = 5e-3\nslope_down = 5e-3\n"
     "[experiment]\nhorizon = 210\nn_synapses = 6\n"
     "potentiation = [[70, [0, 1]], [105, [2, 3]], [140, [4, 5]]]\ndepress_all_at = 175\n"},
    {"fig12",
     "[dpi]\ni_tau = 4e-13\n"
     "[agc]\ni_ref = 1e-8\nslope_up = 5e-3\nslope_down = 5e-3\n"
     "[experiment]\nhorizon = 250\nn_synapses = 8\n"
     "potentiation = [[70, [0, 1]], [105, [2, 3]], [140, [4, 5]], [175, [6, 7]]]\n"
     "depress_all_at = 210\n"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int bracket_depth(std::string_view s) {
  int depth = 0;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

json parse_value(const std::string& key, const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) {
    if (text.find_first_of("[]{},\"") != std::string::npos)
      throw ValidationError(key + ": malformed value '" + text + "'");
    return json(text);
  }
  return v;
}

// Typed view of the merged configuration.
class Values {
 public:
  explicit Values(const RunConfig& cfg) : cfg_(cfg) {}

  bool cfg_has(const std::string& key) const { return cfg_.has(key); }

  bool present(const std::string& key) const { return cfg_.has(key) && !value(key).is_null(); }

  json value(const std::string& key) const {
    const std::string* t = cfg_.get(key);
    if (!t) return json();
    return parse_value(key, *t);
  }

  double number(const std::string& key, double fallback) const {
    const auto v = opt_number(key);
    return v ? *v : fallback;
  }

  std::optional<double> opt_number(const std::string& key) const {
    const json v = value(key);
    if (v.is_null()) return std::nullopt;
    return to_number(key, v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    const json v = value(key);
    if (v.is_null()) return fallback;
    return to_bool(key, v);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const json v = value(key);
    if (v.is_null()) return fallback;
    if (!v.is_string()) throw ValidationError(key + ": expected a word");
    return v.get<std::string>();
  }

  static double to_number(const std::string& key, const json& v) {
    if (!v.is_number()) throw ValidationError(key + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(key + ": expected a finite number");
    return d;
  }

  static std::size_t to_index(const std::string& key, const json& v) {
    const double d = to_number(key, v);
    if (d < 0.0 || d != std::floor(d) || d > 1e9)
      throw ValidationError(key + ": expected a non-negative integer");
    return static_cast<std::size_t>(d);
  }

  static bool to_bool(const std::string& key, const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number()) {
      const double d = v.get<double>();
      if (d == 0.0 || d == 1.0) return d == 1.0;
    }
    throw ValidationError(key + ": expected true/false or 0/1");
  }

  static json array(const std::string& key, json v, std::size_t size = 0) {
    if (!v.is_array()) throw ValidationError(key + ": expected a list");
    if (size && v.size() != size)
      throw ValidationError(key + ": expected " + std::to_string(size) + " elements");
    return v;
  }

 private:
  const RunConfig& cfg_;
};

bool is_protocol(const std::string& name) {
  for (const auto& p : kProtocolText)
    if (p[0] == name) return true;
  return false;
}

Model build_model(const Values& v) {
  Model m;
  m.device.u_t = v.number("device.u_t", m.device.u_t);
  m.device.kappa = v.number("device.kappa", m.device.kappa);
  m.device.i0 = v.number("device.i0", m.device.i0);
  m.device.vdd = v.number("device.vdd", m.device.vdd);
  m.device.validate();

  m.cell.c_f = v.number("leakage.c_f", m.cell.c_f);
  m.cell.i_parasitic_up = v.number("leakage.i_parasitic_up", m.cell.i_parasitic_up);
  m.cell.i_parasitic_down = v.number("leakage.i_parasitic_down", m.cell.i_parasitic_down);
  m.cell.v_g = v.number("agc.v_g", m.cell.v_g);
  if (v.present("leakage.anchors")) {
    m.anchors.clear();
    for (const auto& a : Values::array("leakage.anchors", v.value("leakage.anchors"))) {
      Values::array("leakage.anchors", a, 3);
      m.anchors.push_back({Values::to_number("leakage.anchors", a[0]),
                           Values::to_number("leakage.anchors", a[1]),
                           Values::to_number("leakage.anchors", a[2])});
    }
  } else {
    m.anchors = default_leakage_anchors(m.device);
  }

  m.dpi.c_dpi = v.number("dpi.c_dpi", m.dpi.c_dpi);
  m.dpi.i_tau = v.number("dpi.i_tau", m.dpi.i_tau);

  if (v.present("synapses.weights")) {
    for (const auto& w : Values::array("synapses.weights", v.value("synapses.weights")))
      m.bank.weights.push_back(Values::to_number("synapses.weights", w));
  }
  m.bank.pulse_width = v.number("synapses.pulse_width", m.bank.pulse_width);
  m.bank.i_dc = v.number("synapses.i_dc", m.bank.i_dc);

  m.neuron.q_th = v.number("neuron.q_th", m.neuron.q_th);
  m.neuron.rho = v.number("neuron.rho", m.neuron.rho);
  m.neuron.i_leak = v.number("neuron.i_leak", m.neuron.i_leak);
  m.neuron.adapt_q = v.number("neuron.adapt_q", m.neuron.adapt_q);
  m.neuron.adapt_tau = v.number("neuron.adapt_tau", m.neuron.adapt_tau);
  m.rate_window = v.number("neuron.rate_window", m.rate_window);
  if (v.present("neuron.calibrate")) {
    const json pts = Values::array("neuron.calibrate", v.value("neuron.calibrate"), 2);
    for (const auto& p : pts) {
      Values::array("neuron.calibrate", p, 2);
      m.neuron_calibration.push_back({Values::to_number("neuron.calibrate", p[0]),
                                      Values::to_number("neuron.calibrate", p[1])});
    }
    try {
      const NeuronParams fit = calibrate_neuron(m.neuron_calibration[0], m.neuron_calibration[1]);
      m.neuron.q_th = fit.q_th;
      m.neuron.rho = fit.rho;
    } catch (const CalibrationError& e) {
      throw ValidationError(std::string("neuron.calibrate: ") + e.what());
    }
  }

  m.refs.i_ref = v.number("agc.i_ref", m.refs.i_ref);
  m.refs.v_ref_h = v.number("agc.v_ref_h", m.refs.v_ref_h);
  m.refs.v_ref_m = v.number("agc.v_ref_m", m.refs.v_ref_m);
  m.refs.v_ref_l = v.number("agc.v_ref_l", m.refs.v_ref_l);
  m.refs.hysteresis_eps = v.number("agc.hysteresis_eps", m.refs.hysteresis_eps);
  return m;
}

// Explicit agc.slope_* keys; a missing side falls back to the calibration.
void apply_slope_keys(Model& m, const Values& v) {
  const auto up = v.opt_number("agc.slope_up");
  const auto down = v.opt_number("agc.slope_down");
  if (!up && !down) return;
  RampSlopes s = m.slope_override.value_or(RampSlopes{0.0, 0.0});
  if (!m.slope_override && (!up || !down)) s = m.slopes();
  if (up) s.up = *up;
  if (down) s.down = *down;
  m.slope_override = s;
}

void reject_foreign_keys(const RunConfig& cfg, const std::string& protocol) {
  auto check = [&](const char* const* begin, const char* const* end, bool allowed) {
    if (allowed) return;
    for (auto it = begin; it != end; ++it)
      if (cfg.has(*it))
        throw ValidationError(std::string(*it) + " has no effect for protocol '" + protocol + "'");
  };
  const bool step = protocol == "fig6" || protocol == "fig7" || protocol == "fig8";
  const bool learning = protocol == "fig11" || protocol == "fig12";
  check(std::begin(kStepKeys), std::end(kStepKeys), step);
  check(std::begin(kSlopeKeys), std::end(kSlopeKeys), protocol == "fig9");
  check(std::begin(kLongKeys), std::end(kLongKeys), protocol == "fig10");
  check(std::begin(kLearningKeys), std::end(kLearningKeys), learning);
}

std::optional<Disturbance> disturbance_key(const Values& v) {
  if (!v.present("experiment.disturbance")) return std::nullopt;
  const std::string k = "experiment.disturbance";
  const json d = Values::array(k, v.value(k), 3);
  return Disturbance{Values::to_number(k, d[0]), Values::to_number(k, d[1]),
                     Values::to_number(k, d[2])};
}

Experiment build_protocol(const std::string& protocol, Model m, const Values& v) {
  if (protocol == "fig6" || protocol == "fig7" || protocol == "fig8") {
    const double pre = m.bank.i_dc;
    const auto post = v.opt_number("experiment.i_dc_post");
    const auto t_step = v.opt_number("experiment.t_step");
    if (!post || !t_step) throw ValidationError("step protocols need t_step and i_dc_post");
    if (const auto target = v.opt_number("experiment.recovery_target");
        target && !v.present("agc.slope_up") && !v.present("agc.slope_down")) {
      if (!(pre > 0.0) || !(*post > 0.0) || *post == pre)
        throw ValidationError("experiment.recovery_target needs distinct non-zero currents");
      const double s = slope_for_recovery(*post / pre, *target, m.device);
      m.slope_override = RampSlopes{s, s};
    }
    return build_step_response(m, pre, *post, *t_step, v.opt_number("experiment.t_back"),
                               v.number("experiment.horizon", 0.0));
  }
  if (protocol == "fig9") {
    const bool sw = v.boolean("experiment.pinned_sw", true);
    const double v_g = m.cell.v_g;
    const auto runs = build_slope_sweep(m, std::span<const double>(&v_g, 1),
                                        v.number("experiment.excursion", 0.01));
    Experiment e = sw ? runs.front().up : runs.front().down;
    e.protocol = "fig9";
    return e;
  }
  if (protocol == "fig10") {
    const std::optional<double> horizon = v.opt_number("experiment.horizon");
    return build_long_timescale(m, m.cell.v_g, v.number("experiment.step_ratio", 2.0), horizon,
                                disturbance_key(v));
  }
  if (protocol == "fig11" || protocol == "fig12") {
    LearningSpec spec;
    spec.n_synapses = static_cast<std::size_t>(v.number("experiment.n_synapses", 6.0));
    if (v.number("experiment.n_synapses", 6.0) != static_cast<double>(spec.n_synapses))
      throw ValidationError("experiment.n_synapses: expected a non-negative integer");
    const std::string pk = "experiment.potentiation";
    if (v.present(pk)) {
      for (const auto& p : Values::array(pk, v.value(pk))) {
        Values::array(pk, p, 2);
        Potentiation pot{Values::to_number(pk, p[0]), {}};
        for (const auto& idx : Values::array(pk, p[1])) pot.synapses.push_back(Values::to_index(pk, idx));
        spec.potentiations.push_back(pot);
      }
    }
    spec.depress_all_at = v.opt_number("experiment.depress_all_at");
    spec.input_rate = v.number("experiment.input_rate", spec.input_rate);
    spec.teacher_rate = v.number("experiment.teacher_rate", spec.teacher_rate);
    spec.w_potentiated = v.number("experiment.w_potentiated", spec.w_potentiated);
    spec.w_depressed = v.number("experiment.w_depressed", spec.w_depressed);
    spec.horizon = v.number("experiment.horizon", 0.0);
    Experiment e = build_learning_protocol(m, spec);
    e.protocol = protocol;
    return e;
  }
  Experiment e;
  e.model = std::move(m);
  e.horizon = v.number("experiment.horizon", 0.0);
  return e;
}

void apply_experiment_keys(Experiment& e, const Values& v, const std::string& protocol) {
  e.protocol = v.text("experiment.name", protocol);
  if (protocol == "fig9" && v.cfg_has("experiment.horizon"))
    e.horizon = v.number("experiment.horizon", e.horizon);

  std::string k = "experiment.dc_schedule";
  if (v.cfg_has(k)) {
    e.dc_schedule.clear();
    for (const auto& s : Values::array(k, v.value(k))) {
      Values::array(k, s, 2);
      e.dc_schedule.push_back({Values::to_number(k, s[0]), Values::to_number(k, s[1])});
    }
  }
  k = "experiment.spike_inputs";
  if (v.cfg_has(k)) {
    e.spike_inputs.clear();
    for (const auto& s : Values::array(k, v.value(k))) {
      Values::array(k, s, 2);
      SpikeInput in;
      in.synapse = Values::to_index(k, s[0]);
      if (s[1].is_array()) {
        for (const auto& t : s[1]) in.times.push_back(Values::to_number(k, t));
      } else {
        in.rate = Values::to_number(k, s[1]);
      }
      e.spike_inputs.push_back(std::move(in));
    }
  }
  k = "experiment.weight_schedule";
  if (v.cfg_has(k)) {
    e.weight_schedule.clear();
    for (const auto& s : Values::array(k, v.value(k))) {
      Values::array(k, s, 3);
      e.weight_schedule.push_back(
          {Values::to_number(k, s[0]), Values::to_index(k, s[1]), Values::to_number(k, s[2])});
    }
  }
  if (v.cfg_has("experiment.teacher_current"))
    e.teacher_current = v.number("experiment.teacher_current", e.teacher_current);
  if (v.cfg_has("experiment.disturbance")) e.disturbance = disturbance_key(v);
  if (v.cfg_has("experiment.pinned_sw")) {
    const json p = v.value("experiment.pinned_sw");
    e.pinned_sw = p.is_null() ? std::nullopt
                              : std::optional<bool>(Values::to_bool("experiment.pinned_sw", p));
  }
  if (v.cfg_has("experiment.start_locked"))
    e.start_locked = v.boolean("experiment.start_locked", e.start_locked);
  if (v.cfg_has("experiment.spike_mode"))
    e.spike_mode = spike_mode_from_string(v.text("experiment.spike_mode", "analytic"));
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value_text) {
  if (!is_known_key(key)) throw ValidationError("unknown config key '" + key + "'");
  values_[key] = value_text;
}

const std::string* RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void RunConfig::merge(const RunConfig& over) {
  for (const auto& [k, v] : over.values_) values_[k] = v;
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty() || line[0] == ';') continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') fail("malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside of a section");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    // Lists may continue over several lines until the brackets balance.
    while (bracket_depth(value) > 0 && std::getline(in, raw)) {
      ++lineno;
      value += " " + trim(raw.substr(0, raw.find('#')));
    }
    if (bracket_depth(value) != 0) fail("unbalanced brackets in value of " + key);
    if (!is_known_key(key)) fail("unknown key '" + key + "'");
    if (cfg.has(key)) fail("duplicate key '" + key + "'");
    (void)parse_value(key, value);
    cfg.set(key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::span<const KeyInfo> config_keys() { return kKeys; }

std::vector<std::string> sweepable_keys() {
  std::vector<std::string> out;
  for (const auto& k : kKeys)
    if (k.sweepable) out.emplace_back(k.key);
  return out;
}

bool is_known_key(const std::string& key) {
  return std::any_of(std::begin(kKeys), std::end(kKeys),
                     [&](const KeyInfo& k) { return k.key == key; });
}

std::string config_help() {
  std::ostringstream o;
  std::string section;
  for (const auto& k : kKeys) {
    const std::string_view sec = k.key.substr(0, k.key.find('.'));
    if (sec != section) {
      section = std::string(sec);
      o << "\n[" << section << "]\n";
    }
    o << "  " << k.key.substr(k.key.find('.') + 1) << " = " << k.default_text << "\n      "
      << k.doc << "\n";
  }
  o << "\nProtocols:";
  for (const auto& p : protocol_names()) o << " " << p;
  o << "\n";
  return o.str();
}

std::vector<std::string> protocol_names() {
  std::vector<std::string> out;
  for (const auto& p : kProtocolText) out.emplace_back(p[0]);
  return out;
}

RunConfig protocol_defaults(const std::string& name) {
  for (const auto& p : kProtocolText)
    if (p[0] == name) return parse_config(p[1], "protocol " + name);
  throw ValidationError("unknown protocol '" + name + "'");
}

RunSetup build_run(const RunConfig& user) {
  std::string protocol = "custom";
  if (const std::string* p = user.get("experiment.protocol")) {
    const json v = parse_value("experiment.protocol", *p);
    if (!v.is_string()) throw ValidationError("experiment.protocol: expected a word");
    protocol = v.get<std::string>();
  }
  if (!is_protocol(protocol)) {
    std::string names;
    for (const auto& n : protocol_names()) names += " " + n;
    throw ValidationError("unknown protocol '" + protocol + "'; choose one of:" + names);
  }
  RunConfig merged = protocol_defaults(protocol);
  merged.merge(user);
  reject_foreign_keys(merged, protocol);

  const Values v(merged);
  RunSetup setup;
  try {
    Model m = build_model(v);
    apply_slope_keys(m, v);
    setup.experiment = build_protocol(protocol, std::move(m), v);
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
  apply_experiment_keys(setup.experiment, v, protocol);

  EngineTolerances& tol = setup.tolerances;
  tol.gain_drift_eta = v.number("engine.gain_drift_eta", tol.gain_drift_eta);
  tol.max_segment = v.number("engine.max_segment", tol.max_segment);
  if (const auto si = v.opt_number("engine.sample_interval"))
    tol.sample_interval = *si;
  else if (protocol == "fig9" && setup.experiment.horizon > 0.0)
    tol.sample_interval = setup.experiment.horizon / 200.0;

  setup.experiment.validate();
  tol.validate();
  return setup;
}

}  // namespace homeoscale
