#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "homeoscale/device.h"

namespace homeoscale {

struct DpiParams {
  double c_dpi = 1e-12;  // F
  double i_tau = 1e-11;  // A

  void validate() const;
};

// Weight currents of every synapse on the shared integrator plus the DC test
// branch. A synapse contributes its I_wi only while one of its input pulses
// is active.
struct SynapseBank {
  std::vector<double> weights;
  double pulse_width = 1e-3;
  double i_dc = 0.0;

  void validate() const;
};

struct DpiState {
  double i_syn = 0.0;
  double t = 0.0;
};

// tau_s = C_DPI * U_T / (kappa * I_tau)
double dpi_time_constant(const DpiParams& p, const DeviceParams& dev);

double total_weight_current(const SynapseBank& bank, std::span<const std::size_t> active_pulses);

// Fixed point of the first-order filter under constant drive.
double dpi_steady_state(double i_w, double i_gain, const DpiParams& p);

// Exact exponential update over dt with I_w and I_gain held constant.
DpiState dpi_evolve(const DpiState& s, double dt, double i_w, double i_gain, const DpiParams& p,
                    const DeviceParams& dev);

// Time until I_syn reaches i_target under constant drive, or nullopt when the
// target does not lie between the current value and the steady state.
std::optional<double> dpi_crossing_time(const DpiState& s, double i_target, double i_w,
                                        double i_gain, const DpiParams& p,
                                        const DeviceParams& dev);

// Output voltage of the synapse for a given current, using the global I0.
double synaptic_voltage(double i_syn, const DeviceParams& dev);

// Closed-form filter trajectory while V_THR ramps linearly, so that
//   I_gain(t) = I_gain(0) * exp(-gain_rate * t).
// Solves tau I' + I = drive * exp(-gain_rate * t) from I(0) = i_start, where
// drive = I_w * I_gain(0) / I_tau. Times are relative to the segment start.
struct DpiSegment {
  double i_start;
  double drive;
  double gain_rate;  // 1/s, positive while V_THR rises
  double tau;

  double value(double t) const;
  double derivative(double t) const;
  // Integral of I_syn over [0, t].
  double charge(double t) const;
  // Interior time where the derivative vanishes, if any.
  std::optional<double> extremum() const;
  // First t in [0, t_max] at which the trajectory moves from its current side
  // of `level` to the other side. `from_above` names the side being left.
  std::optional<double> first_crossing(double level, bool from_above, double t_max) const;
};

DpiSegment ramped_segment(double i_start, double i_w, double i_gain_start, double gain_rate,
                          const DpiParams& p, const DeviceParams& dev);

}  // namespace homeoscale
