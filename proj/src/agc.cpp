#include "homeoscale/agc.h"

#include <cmath>

#include "homeoscale/errors.h"

namespace homeoscale {

void AgcRefs::validate() const {
  if (!(i_ref > 0.0)) throw ValidationError("agc.i_ref must be > 0");
  if (!(v_ref_l < v_ref_m && v_ref_m < v_ref_h))
    throw ValidationError("agc references must satisfy v_ref_l < v_ref_m < v_ref_h");
  if (!(hysteresis_eps >= 0.0 && hysteresis_eps < 1.0))
    throw ValidationError("agc.hysteresis_eps must lie in [0, 1)");
}

bool comparator(double i_syn, bool prev_sw, const AgcRefs& refs) {
  if (i_syn > refs.upper()) return true;
  if (i_syn < refs.lower()) return false;
  return prev_sw;
}

double select_vds(bool sw, const AgcRefs& refs) {
  return sw ? refs.v_ref_m - refs.v_ref_l : refs.v_ref_m - refs.v_ref_h;
}

AgcState apply_sw(const AgcState& state, bool new_sw, double t, RampSlopes slopes) {
  if (t < state.anchor_t) throw OrderingError("apply_sw: time precedes the ramp anchor");
  if (new_sw == state.sw) return state;
  AgcState next = state;
  next.anchor_v = state.v_thr(t);
  next.anchor_t = t;
  next.sw = new_sw;
  next.slope = new_sw ? slopes.up : -slopes.down;
  next.at_rail = false;
  ++next.toggle_count;
  return next;
}

AgcState hold_ramp(const AgcState& state, double t) {
  if (t < state.anchor_t) throw OrderingError("hold_ramp: time precedes the ramp anchor");
  AgcState next = state;
  next.anchor_v = state.v_thr(t);
  next.anchor_t = t;
  next.slope = 0.0;
  next.at_rail = true;
  return next;
}

AgcState reset(const AgcRefs& refs, double t, RampSlopes slopes) {
  AgcState s;
  s.sw = false;
  s.anchor_t = t;
  s.anchor_v = refs.v_ref_m;
  s.slope = -slopes.down;
  return s;
}

double predict_recovery_time(double step_ratio, double slope, const DeviceParams& dev) {
  if (!(step_ratio > 0.0)) throw DomainError("predict_recovery_time: step ratio must be > 0");
  if (!(slope > 0.0)) throw DomainError("predict_recovery_time: slope must be > 0");
  return dev.log_voltage_scale() * std::abs(std::log(step_ratio)) / slope;
}

double slope_for_recovery(double step_ratio, double target, const DeviceParams& dev) {
  if (!(step_ratio > 0.0) || step_ratio == 1.0)
    throw DomainError("slope_for_recovery: step ratio must be > 0 and != 1");
  if (!(target > 0.0)) throw DomainError("slope_for_recovery: target time must be > 0");
  return dev.log_voltage_scale() * std::abs(std::log(step_ratio)) / target;
}

double chatter_period(RampSlopes slopes, const AgcRefs& refs, const DeviceParams& dev) {
  if (!(slopes.up > 0.0) || !(slopes.down > 0.0))
    throw DomainError("chatter_period: slopes must be > 0");
  const double eps = refs.hysteresis_eps;
  if (eps <= 0.0)
    throw UndefinedPeriodError("chatter_period: zero hysteresis has no finite limit-cycle period");
  const double dv = dev.log_voltage_scale() * std::log((1.0 + eps) / (1.0 - eps));
  return dv * (1.0 / slopes.up + 1.0 / slopes.down);
}

}  // namespace homeoscale
