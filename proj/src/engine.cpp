#include "homeoscale/engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "homeoscale/agc.h"
#include "homeoscale/dpi.h"
#include "homeoscale/errors.h"
#include "homeoscale/neuron.h"
#include "homeoscale/rng.h"

namespace homeoscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
  enum class Kind { dc, weight, disturb_on, disturb_off };
  double t;
  Kind kind;
  std::size_t synapse;
  double value;
};

class Simulator {
 public:
  Simulator(const Experiment& e, const EngineTolerances& tol, std::uint64_t seed)
      : e_(e), m_(e.model), tol_(tol), seed_(seed) {}

  Trace run() {
    init();
    apply_edges();
    check_comparator();
    record();
    while (t_ < e_.horizon) step();
    record();
    finish_meta();
    return std::move(trace_);
  }

 private:
  void init() {
    slopes_ = m_.slopes();
    weights_ = m_.bank.weights;
    i_dc_ = m_.bank.i_dc;
    active_until_.assign(weights_.size(), -kInf);
    closed_loop_ = !e_.pinned_sw.has_value();

    for (const auto& s : e_.dc_schedule) edges_.push_back({s.t, Edge::Kind::dc, 0, s.i_dc});
    for (const auto& w : e_.weight_schedule)
      edges_.push_back({w.t, Edge::Kind::weight, w.synapse, w.weight});
    if (e_.disturbance) {
      edges_.push_back({e_.disturbance->t, Edge::Kind::disturb_on, 0, e_.disturbance->factor});
      edges_.push_back(
          {e_.disturbance->t + e_.disturbance->duration, Edge::Kind::disturb_off, 0, 1.0});
    }
    std::stable_sort(edges_.begin(), edges_.end(),
                     [](const Edge& a, const Edge& b) { return a.t < b.t; });

    for (std::size_t k = 0; k < e_.spike_inputs.size(); ++k) {
      const SpikeInput& in = e_.spike_inputs[k];
      const std::vector<double> times =
          in.times.empty() ? poisson_train(in.rate, e_.horizon, derive_seed(seed_, k)) : in.times;
      for (double t : times) arrivals_.emplace_back(t, in.synapse);
    }
    std::stable_sort(arrivals_.begin(), arrivals_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    agc_ = reset(m_.refs, 0.0, slopes_);
    if (e_.pinned_sw) {
      agc_.sw = *e_.pinned_sw;
      agc_.slope = agc_.sw ? slopes_.up : -slopes_.down;
    } else if (e_.start_locked) {
      // Pre-settle V_THR so the mean drive maps onto I_REF.
      const double drive = e_.mean_drive_at(0.0);
      const double v = threshold_for_gain(m_.refs.i_ref * m_.dpi.i_tau / drive, m_.device);
      agc_.anchor_v = std::clamp(v, 0.0, m_.device.vdd);
      i_syn_ = dpi_steady_state(drive, gain_current(agc_.anchor_v, m_.device), m_.dpi);
    }
    trace_.meta.seed = seed_;
    trace_.meta.config_digest = experiment_digest(e_);
    trace_.meta.protocol = e_.protocol;
    trace_.meta.spike_mode = to_string(e_.spike_mode);
  }

  double drive() const {
    double total = i_dc_;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (active_until_[i] > t_) total += weights_[i];
    return total * factor_;
  }

  double rate() const {
    if (e_.spike_mode == SpikeMode::exact) return neuron_.rate_estimate;
    return rate_from_current(i_syn_ + e_.teacher_current, m_.neuron);
  }

  void record() {
    const double v = agc_.v_thr(t_);
    TraceRow r;
    r.t = t_;
    r.i_syn = i_syn_;
    r.v_thr = v;
    r.sw = agc_.sw;
    r.rate = rate();
    r.i_w_total = drive();
    r.i_gain = gain_current(v, m_.device);
    r.i_dc = i_dc_;
    trace_.record(r, weights_);
  }

  // Applies every scheduled change and input arrival at or before t_.
  // Returns true when a scheduled (non-input) change happened.
  bool apply_edges() {
    bool scheduled = false;
    while (next_edge_ < edges_.size() && edges_[next_edge_].t <= t_) {
      const Edge& ed = edges_[next_edge_++];
      switch (ed.kind) {
        case Edge::Kind::dc: i_dc_ = ed.value; break;
        case Edge::Kind::weight: weights_[ed.synapse] = ed.value; break;
        case Edge::Kind::disturb_on:
        case Edge::Kind::disturb_off: factor_ = ed.value; break;
      }
      scheduled = true;
    }
    while (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].first <= t_) {
      const auto& [ta, idx] = arrivals_[next_arrival_++];
      active_until_[idx] = std::max(active_until_[idx], ta + m_.bank.pulse_width);
    }
    return scheduled;
  }

  void toggle(bool new_sw) {
    const double before = agc_.v_thr(t_);
    agc_ = apply_sw(agc_, new_sw, t_, slopes_);
    max_discontinuity_ = std::max(max_discontinuity_, std::abs(agc_.v_thr(t_) - before));
    last_toggle_t_ = t_;
  }

  // Direct comparator evaluation; at most one toggle per instant.
  bool check_comparator() {
    if (!closed_loop_ || last_toggle_t_ == t_) return false;
    const bool c = comparator(i_syn_, agc_.sw, m_.refs);
    if (c == agc_.sw) return false;
    toggle(c);
    return true;
  }

  void hold_at_rail() {
    const double rail = agc_.slope > 0.0 ? m_.device.vdd : 0.0;
    agc_ = hold_ramp(agc_, t_);
    agc_.anchor_v = rail;
    ++trace_.meta.rail_hits;
  }

  double next_sample_time() const {
    return static_cast<double>(sample_k_) * tol_.sample_interval;
  }

  void step() {
    // A ramp already pointing past a rail is held before anything else.
    const double v0 = agc_.v_thr(t_);
    if (!agc_.at_rail && ((agc_.slope > 0.0 && v0 >= m_.device.vdd) ||
                          (agc_.slope < 0.0 && v0 <= 0.0))) {
      hold_at_rail();
      record();
    }

    const GainEval g = gain_current_checked(agc_.v_thr(t_), m_.device);
    if (g.saturated) ++trace_.meta.gain_saturations;
    if (i_syn_ < 10.0 * g.current) ++trace_.meta.validity_warnings;
    const double lambda = m_.device.kappa * agc_.slope / m_.device.u_t;
    const DpiSegment seg = ramped_segment(i_syn_, drive(), g.current, lambda, m_.dpi, m_.device);

    double t_event = e_.horizon;
    if (next_edge_ < edges_.size()) t_event = std::min(t_event, edges_[next_edge_].t);
    if (next_arrival_ < arrivals_.size())
      t_event = std::min(t_event, arrivals_[next_arrival_].first);
    for (double until : active_until_)
      if (until > t_) t_event = std::min(t_event, until);
    t_event = std::min(t_event, next_sample_time());

    const double bound = segment_bound(t_event - t_, agc_.slope, tol_, m_.device);
    double t_end = bound >= t_event - t_ ? t_event : t_ + bound;
    EventKind kind = EventKind::sample;

    if (agc_.slope != 0.0) {
      const double rail = agc_.slope > 0.0 ? m_.device.vdd : 0.0;
      const double t_rail = agc_.anchor_t + (rail - agc_.anchor_v) / agc_.slope;
      if (t_rail < t_end) {
        t_end = std::max(t_rail, t_);
        kind = EventKind::rail;
      }
    }

    if (closed_loop_) {
      const double level = agc_.sw ? m_.refs.lower() : m_.refs.upper();
      const auto tc = seg.first_crossing(level, agc_.sw, t_end - t_);
      if (tc && !(*tc == 0.0 && last_toggle_t_ == t_)) {
        const double t_cross = std::min(t_ + *tc, t_end);
        if (t_cross <= t_end) {
          t_end = t_cross;
          kind = EventKind::comparator_cross;
        }
      }
    }

    advance(seg, t_end);
    ++trace_.meta.segments;

    if (kind == EventKind::comparator_cross && last_toggle_t_ != t_) {
      toggle(!agc_.sw);
      record();
    } else if (kind == EventKind::rail) {
      hold_at_rail();
      record();
    }
    if (apply_edges()) record();
    if (check_comparator()) record();
    if (t_ >= next_sample_time()) {
      record();
      while (next_sample_time() <= t_) ++sample_k_;
    }
  }

  void advance(const DpiSegment& seg, double t_end) {
    const double dt = t_end - t_;
    if (dt <= 0.0) {
      t_ = std::max(t_, t_end);
      return;
    }
    if (e_.spike_mode == SpikeMode::exact) {
      // Neuron drive is the exact mean filter output over short substeps.
      const double h = 0.25 * seg.tau;
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(dt / h)));
      double q_prev = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double b = k == n ? dt : dt * static_cast<double>(k) / static_cast<double>(n);
        const double a = dt * static_cast<double>(k - 1) / static_cast<double>(n);
        const double q = seg.charge(b);
        const double mean = (q - q_prev) / (b - a);
        q_prev = q;
        const double t1 = k == n ? t_end : t_ + b;
        const auto spikes = integrate_neuron(neuron_, t1, std::max(mean, 0.0) + e_.teacher_current,
                                             m_.neuron, m_.rate_window);
        trace_.spikes.insert(trace_.spikes.end(), spikes.begin(), spikes.end());
      }
    }
    i_syn_ = std::max(seg.value(dt), 0.0);
    t_ = t_end;
  }

  void finish_meta() {
    trace_.meta.toggles = agc_.toggle_count;
    trace_.meta.spikes = trace_.spikes.size();
    trace_.meta.max_toggle_discontinuity = max_discontinuity_;
  }

  const Experiment& e_;
  const Model& m_;
  EngineTolerances tol_;
  std::uint64_t seed_;

  RampSlopes slopes_{};
  bool closed_loop_ = true;
  double t_ = 0.0;
  double i_syn_ = 0.0;
  AgcState agc_;
  NeuronState neuron_;
  std::vector<double> weights_;
  double i_dc_ = 0.0;
  double factor_ = 1.0;
  std::vector<double> active_until_;
  std::vector<Edge> edges_;
  std::size_t next_edge_ = 0;
  std::vector<std::pair<double, std::size_t>> arrivals_;
  std::size_t next_arrival_ = 0;
  std::uint64_t sample_k_ = 1;
  double last_toggle_t_ = -kInf;
  double max_discontinuity_ = 0.0;
  Trace trace_;
};

}  // namespace

void EngineTolerances::validate() const {
  if (!(gain_drift_eta > 0.0 && gain_drift_eta < 0.1))
    throw ValidationError("engine.gain_drift_eta must lie in (0, 0.1)");
  if (!(sample_interval > 0.0)) throw ValidationError("engine.sample_interval must be > 0");
  if (!(max_segment > 0.0)) throw ValidationError("engine.max_segment must be > 0");
}

double segment_bound(double time_to_next_event, double ramp_slope, const EngineTolerances& tol,
                     const DeviceParams& dev) {
  double bound = std::min(time_to_next_event, tol.max_segment);
  if (ramp_slope != 0.0)
    bound = std::min(bound, tol.gain_drift_eta * dev.log_voltage_scale() / std::abs(ramp_slope));
  return bound;
}

Trace run(const Experiment& experiment, const EngineTolerances& tol, std::uint64_t seed) {
  experiment.validate();
  tol.validate();
  Simulator sim(experiment, tol, seed);
  return sim.run();
}

}  // namespace homeoscale
