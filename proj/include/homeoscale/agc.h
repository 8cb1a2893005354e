#pragma once

#include <cstdint>

#include "homeoscale/device.h"

namespace homeoscale {

struct AgcRefs {
  double i_ref = 20e-9;
  double v_ref_h = 1.384;
  double v_ref_m = 1.382;
  double v_ref_l = 1.380;
  double hysteresis_eps = 1e-3;  // relative half-width of the comparator deadband

  void validate() const;
  double upper() const { return i_ref * (1.0 + hysteresis_eps); }
  double lower() const { return i_ref * (1.0 - hysteresis_eps); }
};

// Magnitudes of dV_THR/dt for the two switch states.
struct RampSlopes {
  double up;    // SW = 1, V_THR rises
  double down;  // SW = 0, V_THR falls
};

// V_THR is kept as an exact affine function of time between switch events:
//   V_THR(t) = anchor_v + slope * (t - anchor_t)
struct AgcState {
  bool sw = false;
  double anchor_t = 0.0;
  double anchor_v = 0.0;
  double slope = 0.0;  // signed V/s; zero while held at a supply rail
  std::uint64_t toggle_count = 0;
  bool locked = false;
  bool at_rail = false;

  double v_thr(double t) const { return anchor_v + slope * (t - anchor_t); }
};

// SW = 1 above the upper band edge, 0 below the lower one; holds inside.
bool comparator(double i_syn, bool prev_sw, const AgcRefs& refs);

// Drain-source voltage of the leakage transistor. SW = 1 selects V_REF_L, so
// the cell discharges C_F and V_THR rises.
double select_vds(bool sw, const AgcRefs& refs);

AgcState apply_sw(const AgcState& state, bool new_sw, double t, RampSlopes slopes);

// Stops the ramp at time t (V_THR pinned to a rail) until the next toggle.
AgcState hold_ramp(const AgcState& state, double t);

// RST: V_THR := V_REF_M at time t, SW = 0, ramp falling.
AgcState reset(const AgcRefs& refs, double t, RampSlopes slopes);

// Time for the ramp to rescale I_gain by 1/step_ratio.
double predict_recovery_time(double step_ratio, double slope, const DeviceParams& dev);

// Slope that makes predict_recovery_time return `target`.
double slope_for_recovery(double step_ratio, double target, const DeviceParams& dev);

// Locked-region limit cycle period of the quasi-static loop.
double chatter_period(RampSlopes slopes, const AgcRefs& refs, const DeviceParams& dev);

}  // namespace homeoscale
