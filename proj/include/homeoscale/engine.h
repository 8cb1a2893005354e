#pragma once

#include <cstdint>

#include "homeoscale/device.h"
#include "homeoscale/experiment.h"
#include "homeoscale/trace.h"

namespace homeoscale {

struct EngineTolerances {
  double gain_drift_eta = 1e-3;  // max relative I_gain change per segment
  double sample_interval = 0.01;  // s between regular trace rows
  double max_segment = 1.0;       // s

  void validate() const;
};

// Tie order at equal times follows the enumeration order.
enum class EventKind { stimulus_edge, pulse_end, comparator_cross, rail, spike, sample, end };

struct Event {
  double t;
  EventKind kind;
};

// Longest segment allowed from the current state: the least of the time to
// the next scheduled event, the gain-drift bound eta * U_T / (kappa |slope|),
// and max_segment.
double segment_bound(double time_to_next_event, double ramp_slope, const EngineTolerances& tol,
                     const DeviceParams& dev);

// Simulates the experiment from reset to its horizon. Between events the
// filter, ramp and neuron advance in closed form; comparator crossings are
// located on the exact trajectory. Identical inputs give identical traces.
Trace run(const Experiment& experiment, const EngineTolerances& tol, std::uint64_t seed);

}  // namespace homeoscale
