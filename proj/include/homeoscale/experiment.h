#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homeoscale/agc.h"
#include "homeoscale/device.h"
#include "homeoscale/dpi.h"
#include "homeoscale/neuron.h"
#include "homeoscale/trace.h"

namespace homeoscale {

// Every physical parameter of one neuron with its synapses and AGC loop.
struct Model {
  DeviceParams device;
  LeakageCellParams cell;
  std::vector<LeakageAnchor> anchors = default_leakage_anchors();
  DpiParams dpi;
  SynapseBank bank;
  NeuronParams neuron;
  std::vector<RatePoint> neuron_calibration;  // when set, overrides q_th/rho
  double rate_window = 1.0;
  AgcRefs refs;
  std::optional<RampSlopes> slope_override;

  void validate() const;
  LeakageCalibration calibration() const;
  // Override if present, else the leakage calibration at cell.v_g.
  RampSlopes slopes() const;
};

struct DcStep {
  double t;
  double i_dc;
};

// Input to one synapse: Poisson at `rate`, or the explicit `times`.
struct SpikeInput {
  std::size_t synapse = 0;
  double rate = 0.0;
  std::vector<double> times;
};

struct WeightChange {
  double t;
  std::size_t synapse;
  double weight;
};

// Multiplies the total weight current by `factor` during [t, t + duration).
struct Disturbance {
  double t;
  double duration;
  double factor;
};

enum class SpikeMode { analytic, exact };

const char* to_string(SpikeMode mode);
SpikeMode spike_mode_from_string(const std::string& s);

struct Experiment {
  std::string protocol = "custom";
  Model model;
  double horizon = 0.0;
  std::vector<DcStep> dc_schedule;
  std::vector<SpikeInput> spike_inputs;
  std::vector<WeightChange> weight_schedule;
  double teacher_current = 0.0;
  std::optional<Disturbance> disturbance;
  std::optional<bool> pinned_sw;  // open-loop: comparator disabled
  bool start_locked = true;       // V_THR pre-settled so I_syn starts at I_REF
  SpikeMode spike_mode = SpikeMode::analytic;

  void validate() const;
  // Times at which the drive changes after t = 0.
  std::vector<double> step_times() const;
  // Mean total weight current just after time t (pulses averaged by rate).
  double mean_drive_at(double t) const;
};

// Canonical key-value text of an experiment; parses back to the same value.
std::string canonical_text(const Experiment& e);
// FNV-1a 64 of canonical_text, as 16 hex digits.
std::string experiment_digest(const Experiment& e);

// Constant I_DC with one step and an optional step back.
Experiment build_step_response(const Model& base, double pre_step, double post_step,
                               double t_step, std::optional<double> t_back, double horizon);

struct SlopeRun {
  double v_g;
  Experiment up;
  Experiment down;
};

// Open-loop runs with SW pinned in each direction. Each run lasts long
// enough for V_THR to move by `excursion` volts.
std::vector<SlopeRun> build_slope_sweep(const Model& base, std::span<const double> v_g_values,
                                        double excursion = 0.01);

struct Potentiation {
  double t;
  std::vector<std::size_t> synapses;
};

struct LearningSpec {
  std::size_t n_synapses = 6;
  std::vector<Potentiation> potentiations;
  std::optional<double> depress_all_at;
  double input_rate = 100.0;
  double teacher_rate = 80.0;
  double w_potentiated = 1e-9;
  double w_depressed = 0.05e-9;
  double horizon = 0.0;
  // Averaging window that must fit between recovery and the next event.
  double settle_window = 10.0;
};

// All synapses start depressed; listed synapses switch to the potentiated
// weight at each time. The teacher current is sized so that the neuron fires
// at teacher_rate while I_syn sits at I_REF.
Experiment build_learning_protocol(const Model& base, const LearningSpec& spec);

// Drive drops by step_ratio (post = pre / ratio) at t_step; the horizon is at
// least t_step + 2 * predicted recovery.
Experiment build_long_timescale(const Model& base, double v_g, double step_ratio,
                                std::optional<double> horizon = std::nullopt,
                                std::optional<Disturbance> disturbance = std::nullopt);

struct RunMetrics {
  std::vector<double> recovery_times;  // per step; NaN when never recovered
  double peak_rate = 0.0;
  double settled_rate = 0.0;
  double locked_toggle_freq = 0.0;  // SW cycles per second inside locked runs
  double weight_ratio_drift = 0.0;
  std::optional<double> slope_up;    // measured from V_THR while SW = 1
  std::optional<double> slope_down;  // measured from V_THR while SW = 0
};

struct MetricOptions {
  double band = 0.05;    // relative I_REF band for recovery
  double sustain = 5.0;  // s the trace must stay in band
};

// Time from t_step to the first entry into the I_REF band that is held for
// `sustain` seconds (or until t_limit). NaN when it never happens.
double recovery_time(std::span<const TraceRow> rows, double i_ref, double t_step, double t_limit,
                     const MetricOptions& opt = {});

// Cycle frequency of SW over locked runs: stretches of toggles whose spacing
// stays within three times the median spacing.
double locked_toggle_frequency(std::span<const TraceRow> rows);

RunMetrics extract_metrics(const Trace& trace, const Experiment& experiment,
                           const MetricOptions& opt = {});

void write_metrics(const RunMetrics& m, std::ostream& out);

}  // namespace homeoscale
