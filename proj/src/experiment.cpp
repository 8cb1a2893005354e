#include "homeoscale/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "homeoscale/errors.h"

namespace homeoscale {

namespace {

constexpr double kMaxHorizon = 1e7;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool sorted_by_time(const auto& v) {
  return std::is_sorted(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

// Fraction of time a synapse is gated on by Poisson input with pulse union.
double pulse_duty(double rate, double width) { return -std::expm1(-rate * width); }

}  // namespace

const char* to_string(SpikeMode mode) {
  return mode == SpikeMode::exact ? "exact" : "analytic";
}

SpikeMode spike_mode_from_string(const std::string& s) {
  if (s == "analytic") return SpikeMode::analytic;
  if (s == "exact") return SpikeMode::exact;
  throw ValidationError("engine.spike_mode must be 'analytic' or 'exact', got '" + s + "'");
}

void Model::validate() const {
  device.validate();
  cell.validate();
  dpi.validate();
  bank.validate();
  neuron.validate();
  refs.validate();
  if (!(rate_window > 0.0)) throw ValidationError("neuron.rate_window must be > 0");
  if (slope_override && (!(slope_override->up > 0.0) || !(slope_override->down > 0.0)))
    throw ValidationError("agc slope overrides must be > 0");
  (void)calibration();
}

LeakageCalibration Model::calibration() const { return fit_leakage_calibration(anchors); }

RampSlopes Model::slopes() const {
  if (slope_override) return *slope_override;
  const LeakageCalibration calib = calibration();
  try {
    return {llc_slope(cell.v_g, RampDirection::up, calib, cell),
            llc_slope(cell.v_g, RampDirection::down, calib, cell)};
  } catch (const DomainError& e) {
    throw ValidationError(std::string("agc.v_g: ") + e.what());
  }
}

void Experiment::validate() const {
  model.validate();
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw ValidationError("experiment.horizon must be finite and >= 0");
  if (horizon > kMaxHorizon) throw ValidationError("experiment.horizon exceeds 1e7 s");
  auto in_range = [&](double t) { return t >= 0.0 && t <= horizon; };

  if (!sorted_by_time(dc_schedule)) throw ValidationError("experiment.dc_schedule must be time-ordered");
  for (const auto& s : dc_schedule) {
    if (!in_range(s.t)) throw ValidationError("experiment.dc_schedule time outside [0, horizon]");
    if (!(s.i_dc >= 0.0)) throw ValidationError("experiment.dc_schedule current must be >= 0");
  }
  const std::size_t n = model.bank.weights.size();
  for (const auto& in : spike_inputs) {
    if (in.synapse >= n) throw ValidationError("experiment.spike_inputs synapse index out of range");
    if (!(in.rate >= 0.0)) throw ValidationError("experiment.spike_inputs rate must be >= 0");
    if (!std::is_sorted(in.times.begin(), in.times.end()))
      throw ValidationError("experiment.spike_inputs times must be ordered");
    for (double t : in.times)
      if (!in_range(t)) throw ValidationError("experiment.spike_inputs time outside [0, horizon]");
  }
  if (!sorted_by_time(weight_schedule))
    throw ValidationError("experiment.weight_schedule must be time-ordered");
  for (const auto& w : weight_schedule) {
    if (!in_range(w.t)) throw ValidationError("experiment.weight_schedule time outside [0, horizon]");
    if (w.synapse >= n) throw ValidationError("experiment.weight_schedule synapse index out of range");
    if (!(w.weight >= 0.0)) throw ValidationError("experiment.weight_schedule weight must be >= 0");
  }
  if (!(teacher_current >= 0.0)) throw ValidationError("experiment.teacher_current must be >= 0");
  if (disturbance) {
    if (!in_range(disturbance->t)) throw ValidationError("experiment.disturbance time outside [0, horizon]");
    if (!(disturbance->duration >= 0.0) || !(disturbance->factor >= 0.0))
      throw ValidationError("experiment.disturbance duration and factor must be >= 0");
  }
  (void)model.slopes();
  if (start_locked && !pinned_sw && !(mean_drive_at(0.0) > 0.0))
    throw ValidationError("experiment.start_locked needs a non-zero initial drive");
}

std::vector<double> Experiment::step_times() const {
  std::vector<double> out;
  double level = model.bank.i_dc;
  for (const auto& s : dc_schedule) {
    if (s.t > 0.0 && s.i_dc != level) out.push_back(s.t);
    level = s.i_dc;
  }
  for (const auto& w : weight_schedule)
    if (w.t > 0.0) out.push_back(w.t);
  if (disturbance && disturbance->factor != 1.0) {
    out.push_back(disturbance->t);
    out.push_back(disturbance->t + disturbance->duration);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Experiment::mean_drive_at(double t) const {
  double i_dc = model.bank.i_dc;
  for (const auto& s : dc_schedule)
    if (s.t <= t) i_dc = s.i_dc;
  std::vector<double> w = model.bank.weights;
  for (const auto& c : weight_schedule)
    if (c.t <= t) w[c.synapse] = c.weight;
  double total = i_dc;
  for (const auto& in : spike_inputs) {
    const double rate = in.times.empty()
                            ? in.rate
                            : (horizon > 0.0 ? static_cast<double>(in.times.size()) / horizon : 0.0);
    total += w[in.synapse] * pulse_duty(rate, model.bank.pulse_width);
  }
  if (disturbance && t >= disturbance->t && t < disturbance->t + disturbance->duration)
    total *= disturbance->factor;
  return total;
}

std::string canonical_text(const Experiment& e) {
  const Model& m = e.model;
  std::ostringstream o;
  o << "[device]\n"
    << "u_t = " << num(m.device.u_t) << "\n"
    << "kappa = " << num(m.device.kappa) << "\n"
    << "i0 = " << num(m.device.i0) << "\n"
    << "vdd = " << num(m.device.vdd) << "\n\n";

  o << "[leakage]\n"
    << "c_f = " << num(m.cell.c_f) << "\n"
    << "i_parasitic_up = " << num(m.cell.i_parasitic_up) << "\n"
    << "i_parasitic_down = " << num(m.cell.i_parasitic_down) << "\n"
    << "anchors = [";
  for (std::size_t i = 0; i < m.anchors.size(); ++i) {
    const auto& a = m.anchors[i];
    o << (i ? ", " : "") << "[" << num(a.v_g) << ", " << num(a.slope_up) << ", "
      << num(a.slope_down) << "]";
  }
  o << "]\n\n";

  o << "[dpi]\n"
    << "c_dpi = " << num(m.dpi.c_dpi) << "\n"
    << "i_tau = " << num(m.dpi.i_tau) << "\n\n";

  o << "[synapses]\nweights = [";
  for (std::size_t i = 0; i < m.bank.weights.size(); ++i)
    o << (i ? ", " : "") << num(m.bank.weights[i]);
  o << "]\n"
    << "pulse_width = " << num(m.bank.pulse_width) << "\n"
    << "i_dc = " << num(m.bank.i_dc) << "\n\n";

  o << "[neuron]\n"
    << "q_th = " << num(m.neuron.q_th) << "\n"
    << "rho = " << num(m.neuron.rho) << "\n"
    << "i_leak = " << num(m.neuron.i_leak) << "\n"
    << "adapt_q = " << num(m.neuron.adapt_q) << "\n"
    << "adapt_tau = " << num(m.neuron.adapt_tau) << "\n"
    << "rate_window = " << num(m.rate_window) << "\n";
  if (!m.neuron_calibration.empty()) {
    o << "calibrate = [";
    for (std::size_t i = 0; i < m.neuron_calibration.size(); ++i)
      o << (i ? ", " : "") << "[" << num(m.neuron_calibration[i].current) << ", "
        << num(m.neuron_calibration[i].rate) << "]";
    o << "]\n";
  }
  o << "\n";

  o << "[agc]\n"
    << "i_ref = " << num(m.refs.i_ref) << "\n"
    << "v_ref_h = " << num(m.refs.v_ref_h) << "\n"
    << "v_ref_m = " << num(m.refs.v_ref_m) << "\n"
    << "v_ref_l = " << num(m.refs.v_ref_l) << "\n"
    << "hysteresis_eps = " << num(m.refs.hysteresis_eps) << "\n"
    << "v_g = " << num(m.cell.v_g) << "\n";
  if (m.slope_override)
    o << "slope_up = " << num(m.slope_override->up) << "\n"
      << "slope_down = " << num(m.slope_override->down) << "\n";
  o << "\n";

  o << "[experiment]\n"
    << "protocol = custom\n"
    << "name = " << e.protocol << "\n"
    << "horizon = " << num(e.horizon) << "\n"
    << "dc_schedule = [";
  for (std::size_t i = 0; i < e.dc_schedule.size(); ++i)
    o << (i ? ", " : "") << "[" << num(e.dc_schedule[i].t) << ", " << num(e.dc_schedule[i].i_dc)
      << "]";
  o << "]\nspike_inputs = [";
  for (std::size_t i = 0; i < e.spike_inputs.size(); ++i) {
    const auto& in = e.spike_inputs[i];
    o << (i ? ", " : "") << "[" << in.synapse << ", ";
    if (in.times.empty()) {
      o << num(in.rate);
    } else {
      o << "[";
      for (std::size_t k = 0; k < in.times.size(); ++k) o << (k ? ", " : "") << num(in.times[k]);
      o << "]";
    }
    o << "]";
  }
  o << "]\nweight_schedule = [";
  for (std::size_t i = 0; i < e.weight_schedule.size(); ++i) {
    const auto& w = e.weight_schedule[i];
    o << (i ? ", " : "") << "[" << num(w.t) << ", " << w.synapse << ", " << num(w.weight) << "]";
  }
  o << "]\n"
    << "teacher_current = " << num(e.teacher_current) << "\n";
  if (e.disturbance)
    o << "disturbance = [" << num(e.disturbance->t) << ", " << num(e.disturbance->duration) << ", "
      << num(e.disturbance->factor) << "]\n";
  if (e.pinned_sw) o << "pinned_sw = " << (*e.pinned_sw ? 1 : 0) << "\n";
  o << "start_locked = " << (e.start_locked ? "true" : "false") << "\n"
    << "spike_mode = " << to_string(e.spike_mode) << "\n";
  return o.str();
}

std::string experiment_digest(const Experiment& e) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text(e)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Experiment build_step_response(const Model& base, double pre_step, double post_step,
                               double t_step, std::optional<double> t_back, double horizon) {
  if (!(pre_step >= 0.0) || !(post_step >= 0.0))
    throw ValidationError("step response currents must be >= 0");
  if (!(horizon > 0.0)) throw ValidationError("step response horizon must be > 0");
  if (!(t_step > 0.0 && t_step <= horizon))
    throw ValidationError("step time must lie in (0, horizon]");
  if (t_back && !(*t_back > t_step)) throw ValidationError("step-back time must follow the step");
  if (t_back && *t_back > horizon) throw ValidationError("step-back time beyond horizon");

  Experiment e;
  e.protocol = "step";
  e.model = base;
  e.model.bank.i_dc = pre_step;
  e.horizon = horizon;
  if (post_step != pre_step || t_back) e.dc_schedule.push_back({t_step, post_step});
  if (t_back) e.dc_schedule.push_back({*t_back, pre_step});
  e.validate();
  return e;
}

std::vector<SlopeRun> build_slope_sweep(const Model& base, std::span<const double> v_g_values,
                                        double excursion) {
  if (!(excursion >= 0.0)) throw ValidationError("slope sweep excursion must be >= 0");
  const LeakageCalibration calib = base.calibration();
  std::vector<SlopeRun> runs;
  for (double v_g : v_g_values) {
    if (!calib.in_guard(v_g)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "V_G = %.6g V outside calibrated interval [%.6g, %.6g] V", v_g,
                    calib.min_v_g() - LeakageCalibration::kGuard,
                    calib.max_v_g() + LeakageCalibration::kGuard);
      throw ValidationError(buf);
    }
    Model m = base;
    m.cell.v_g = v_g;
    m.slope_override.reset();
    m.bank.weights.clear();
    const RampSlopes s = m.slopes();
    auto make = [&](bool sw, double slope) {
      Experiment e;
      e.protocol = "slope_sweep";
      e.model = m;
      e.horizon = excursion / slope;
      e.pinned_sw = sw;
      e.start_locked = false;
      e.validate();
      return e;
    };
    runs.push_back({v_g, make(true, s.up), make(false, s.down)});
  }
  return runs;
}

Experiment build_learning_protocol(const Model& base, const LearningSpec& spec) {
  if (spec.n_synapses == 0) throw ValidationError("learning protocol needs at least one synapse");
  if (!(spec.horizon > 0.0)) throw ValidationError("learning protocol horizon must be > 0");
  if (!(spec.input_rate >= 0.0)) throw ValidationError("learning input rate must be >= 0");
  if (!(spec.w_potentiated >= 0.0) || !(spec.w_depressed >= 0.0))
    throw ValidationError("learning weights must be >= 0");

  std::vector<double> event_times;
  for (const auto& p : spec.potentiations) {
    if (!event_times.empty() && !(p.t > event_times.back()))
      throw ValidationError("potentiation times must be strictly increasing");
    for (std::size_t idx : p.synapses)
      if (idx >= spec.n_synapses)
        throw ValidationError("potentiation synapse index " + std::to_string(idx) + " out of range");
    event_times.push_back(p.t);
  }
  if (spec.depress_all_at) {
    if (!event_times.empty() && !(*spec.depress_all_at > event_times.back()))
      throw ValidationError("depress-all time must follow the last potentiation");
    event_times.push_back(*spec.depress_all_at);
  }
  for (double t : event_times)
    if (!(t > 0.0 && t < spec.horizon)) throw ValidationError("learning event outside (0, horizon)");

  Experiment e;
  e.protocol = "learning";
  e.model = base;
  e.model.bank.weights.assign(spec.n_synapses, spec.w_depressed);
  e.horizon = spec.horizon;
  e.spike_mode = SpikeMode::exact;
  for (std::size_t i = 0; i < spec.n_synapses; ++i) e.spike_inputs.push_back({i, spec.input_rate, {}});
  for (const auto& p : spec.potentiations)
    for (std::size_t idx : p.synapses) e.weight_schedule.push_back({p.t, idx, spec.w_potentiated});
  if (spec.depress_all_at)
    for (std::size_t i = 0; i < spec.n_synapses; ++i)
      e.weight_schedule.push_back({*spec.depress_all_at, i, spec.w_depressed});

  const double needed = current_for_rate(spec.teacher_rate, e.model.neuron);
  e.teacher_current = needed - e.model.refs.i_ref;
  if (e.teacher_current < 0.0)
    throw ValidationError("I_REF alone exceeds the drive for the teacher rate; lower agc.i_ref");
  e.validate();

  // Every event must recover, and leave a settle window, before the next one.
  const RampSlopes slopes = e.model.slopes();
  for (std::size_t k = 0; k < event_times.size(); ++k) {
    const double t = event_times[k];
    const double before = e.mean_drive_at(std::nextafter(t, 0.0));
    const double after = e.mean_drive_at(t);
    if (!(before > 0.0) || !(after > 0.0) || before == after) continue;
    const double ratio = after / before;
    const double slope = ratio > 1.0 ? slopes.up : slopes.down;
    const double needed_t = predict_recovery_time(ratio, slope, e.model.device);
    const double next = k + 1 < event_times.size() ? event_times[k + 1] : spec.horizon;
    if (needed_t + spec.settle_window > next - t) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "learning event at %.6g s needs %.4g s to recover but only %.4g s remain "
                    "before the next event; raise the AGC slopes",
                    t, needed_t + spec.settle_window, next - t);
      throw ValidationError(buf);
    }
  }
  return e;
}

Experiment build_long_timescale(const Model& base, double v_g, double step_ratio,
                                std::optional<double> horizon,
                                std::optional<Disturbance> disturbance) {
  if (!(step_ratio > 0.0)) throw ValidationError("step ratio must be > 0");
  Model m = base;
  m.cell.v_g = v_g;
  m.slope_override.reset();
  if (!m.calibration().in_guard(v_g)) throw ValidationError("agc.v_g outside the calibration guard");
  const double pre = m.bank.i_dc;
  if (!(pre > 0.0)) throw ValidationError("long-timescale protocol needs synapses.i_dc > 0");
  const RampSlopes s = m.slopes();

  double predicted = 0.0;
  if (step_ratio != 1.0)
    predicted = predict_recovery_time(step_ratio, step_ratio > 1.0 ? s.down : s.up, m.device);
  const double t_step = std::max(100.0, 0.05 * predicted);
  const double minimum = t_step + 2.0 * predicted;
  const double h = horizon.value_or(std::max(minimum, 1000.0));
  if (h > kMaxHorizon) throw ValidationError("long-timescale horizon exceeds 1e7 s");
  if (h < minimum) throw ValidationError("horizon shorter than twice the predicted recovery");

  Experiment e;
  e.protocol = "long_timescale";
  e.model = m;
  e.horizon = h;
  if (step_ratio != 1.0) e.dc_schedule.push_back({t_step, pre / step_ratio});
  e.disturbance = disturbance;
  e.validate();
  return e;
}

double recovery_time(std::span<const TraceRow> rows, double i_ref, double t_step, double t_limit,
                     const MetricOptions& opt) {
  auto in_band = [&](const TraceRow& r) { return std::abs(r.i_syn / i_ref - 1.0) <= opt.band; };
  std::size_t k = 0;
  while (k < rows.size() && !(rows[k].t > t_step)) ++k;
  while (k < rows.size() && rows[k].t <= t_limit) {
    if (!in_band(rows[k])) {
      ++k;
      continue;
    }
    const double until = std::min(rows[k].t + opt.sustain, t_limit);
    std::size_t j = k;
    bool held = true;
    while (j < rows.size() && rows[j].t <= until) {
      if (!in_band(rows[j])) {
        held = false;
        break;
      }
      ++j;
    }
    if (held) return rows[k].t - t_step;
    k = j + 1;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double locked_toggle_frequency(std::span<const TraceRow> rows) {
  std::vector<double> toggles;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].sw != rows[i - 1].sw) toggles.push_back(rows[i].t);
  if (toggles.size() < 3) return 0.0;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < toggles.size(); ++i) gaps.push_back(toggles[i] - toggles[i - 1]);
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double limit = 3.0 * sorted[sorted.size() / 2];

  double cycles = 0.0;
  double duration = 0.0;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i <= gaps.size(); ++i) {
    if (i == gaps.size() || gaps[i] > limit) {
      const std::size_t n = i - run_start + 1;  // toggles in the run
      if (n >= 3) {
        cycles += 0.5 * static_cast<double>(n - 1);
        duration += toggles[i] - toggles[run_start];
      }
      run_start = i + 1;
    }
  }
  return duration > 0.0 ? cycles / duration : 0.0;
}

RunMetrics extract_metrics(const Trace& trace, const Experiment& experiment,
                           const MetricOptions& opt) {
  if (trace.meta.config_digest != experiment_digest(experiment))
    throw ValidationError("trace was not produced by this experiment (config digest mismatch)");
  RunMetrics m;
  const auto& rows = trace.rows;
  if (rows.empty()) return m;
  const double i_ref = experiment.model.refs.i_ref;
  const double t_end = rows.back().t;

  const std::vector<double> steps = experiment.step_times();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] >= t_end) break;
    const double limit = k + 1 < steps.size() ? std::min(steps[k + 1], t_end) : t_end;
    m.recovery_times.push_back(recovery_time(rows, i_ref, steps[k], limit, opt));
  }

  const double peak_from = steps.empty() ? rows.front().t : steps.front();
  for (const auto& r : rows)
    if (r.t >= peak_from) m.peak_rate = std::max(m.peak_rate, r.rate);

  const double window = std::min(10.0, 0.1 * experiment.horizon);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows)
    if (r.t >= t_end - window) {
      sum += r.rate;
      ++count;
    }
  m.settled_rate = count ? sum / static_cast<double>(count) : rows.back().rate;

  m.locked_toggle_freq = locked_toggle_frequency(rows);

  // Scheduled weights replayed from the experiment, compared to the engine's.
  if (!trace.weights.empty()) {
    if (trace.weights.size() != rows.size())
      throw ValidationError("trace weight history does not match its rows");
    std::vector<double> sched = experiment.model.bank.weights;
    std::size_t next = 0;
    const auto& ws = experiment.weight_schedule;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      while (next < ws.size() && ws[next].t <= rows[r].t) {
        sched[ws[next].synapse] = ws[next].weight;
        ++next;
      }
      const auto& w = trace.weights[r];
      if (w.size() != sched.size()) throw ValidationError("trace weight vector has the wrong size");
      const double g = rows[r].i_gain / experiment.model.dpi.i_tau;
      for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = i + 1; j < w.size(); ++j) {
          if (!(sched[i] > 0.0 && sched[j] > 0.0 && w[j] > 0.0)) continue;
          const double contribution_ratio = (w[i] * g) / (w[j] * g);
          const double drift = std::abs(contribution_ratio / (sched[i] / sched[j]) - 1.0);
          m.weight_ratio_drift = std::max(m.weight_ratio_drift, drift);
        }
      }
    }
  }

  // Ramp slopes from contiguous same-SW runs away from the rails.
  const double vdd = experiment.model.device.vdd;
  double dv[2] = {0.0, 0.0};
  double dt[2] = {0.0, 0.0};
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    auto usable = [&](const TraceRow& r) { return r.v_thr > 0.0 && r.v_thr < vdd; };
    while (j + 1 < rows.size() && rows[j + 1].sw == rows[i].sw && usable(rows[j + 1])) ++j;
    if (j > i && usable(rows[i])) {
      const int k = rows[i].sw ? 1 : 0;
      dv[k] += std::abs(rows[j].v_thr - rows[i].v_thr);
      dt[k] += rows[j].t - rows[i].t;
    }
    i = j + 1;
  }
  if (dt[1] > 0.0) m.slope_up = dv[1] / dt[1];
  if (dt[0] > 0.0) m.slope_down = dv[0] / dt[0];
  return m;
}

void write_metrics(const RunMetrics& m, std::ostream& out) {
  out << "recovery_count = " << m.recovery_times.size() << '\n';
  for (std::size_t i = 0; i < m.recovery_times.size(); ++i)
    out << "recovery_time." << i << " = "
        << (std::isnan(m.recovery_times[i]) ? std::string("none")
                                            : format_number(m.recovery_times[i]))
        << '\n';
  out << "peak_rate = " << format_number(m.peak_rate) << '\n'
      << "settled_rate = " << format_number(m.settled_rate) << '\n'
      << "locked_toggle_freq = " << format_number(m.locked_toggle_freq) << '\n'
      << "weight_ratio_drift = " << format_number(m.weight_ratio_drift) << '\n'
      << "slope_up = " << (m.slope_up ? format_number(*m.slope_up) : std::string("none")) << '\n'
      << "slope_down = " << (m.slope_down ? format_number(*m.slope_down) : std::string("none"))
      << '\n';
}

}  // namespace homeoscale
