#include "homeoscale/device.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "homeoscale/errors.h"

namespace homeoscale {

namespace {

constexpr double kExponentClamp = 700.0;

std::string fmt_volts(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g V", v);
  return buf;
}

}  // namespace

void DeviceParams::validate() const {
  if (!(u_t > 0.0)) throw ValidationError("device.u_t must be > 0");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ValidationError("device.kappa must lie in (0, 1]");
  if (!(i0 > 0.0)) throw ValidationError("device.i0 must be > 0");
  if (!(vdd > 0.0)) throw ValidationError("device.vdd must be > 0");
  if (!(q_e > 0.0)) throw ValidationError("device.q_e must be > 0");
}

GainEval gain_current_checked(double v_thr, const DeviceParams& dev) {
  double x = dev.kappa * (dev.vdd - v_thr) / dev.u_t;
  bool saturated = false;
  if (x > kExponentClamp) {
    x = kExponentClamp;
    saturated = true;
  } else if (x < -kExponentClamp) {
    x = -kExponentClamp;
    saturated = true;
  }
  return {dev.i0 * std::exp(x), saturated};
}

double gain_current(double v_thr, const DeviceParams& dev) {
  return gain_current_checked(v_thr, dev).current;
}

double threshold_for_gain(double i_gain, const DeviceParams& dev) {
  if (!(i_gain > 0.0)) throw DomainError("gain current must be > 0");
  return dev.vdd - dev.log_voltage_scale() * std::log(i_gain / dev.i0);
}

double electrons_per_second(double current, const DeviceParams& dev) {
  if (current < 0.0) throw DomainError("electrons_per_second: current must be >= 0");
  return current / dev.q_e;
}

void LeakageCellParams::validate() const {
  if (!(c_f > 0.0)) throw ValidationError("leakage.c_f must be > 0");
  if (!(i_parasitic_up >= 0.0) || !(i_parasitic_down >= 0.0))
    throw ValidationError("leakage parasitic currents must be >= 0");
  if (i_parasitic_up > kParasiticCeiling || i_parasitic_down > kParasiticCeiling)
    throw ValidationError("leakage parasitic currents must not exceed 0.1 aA");
}

double LeakageCalibration::min_v_g() const { return anchors_.front().v_g; }
double LeakageCalibration::max_v_g() const { return anchors_.back().v_g; }

bool LeakageCalibration::in_guard(double v_g) const {
  return !anchors_.empty() && v_g >= min_v_g() - kGuard && v_g <= max_v_g() + kGuard;
}

double LeakageCalibration::slope(double v_g, RampDirection dir) const {
  if (anchors_.size() < 2) throw ValidationError("leakage calibration is empty");
  if (!in_guard(v_g)) {
    throw DomainError("V_G = " + fmt_volts(v_g) + " outside calibrated interval [" +
                      fmt_volts(min_v_g() - kGuard) + ", " + fmt_volts(max_v_g() + kGuard) + "]");
  }
  auto pick = [dir](const LeakageAnchor& a) {
    return dir == RampDirection::up ? a.slope_up : a.slope_down;
  };
  // Segment index: first anchor strictly above v_g, clamped to the outer segments.
  auto it = std::upper_bound(anchors_.begin(), anchors_.end(), v_g,
                             [](double v, const LeakageAnchor& a) { return v < a.v_g; });
  std::size_t hi = static_cast<std::size_t>(it - anchors_.begin());
  hi = std::clamp<std::size_t>(hi, 1, anchors_.size() - 1);
  const LeakageAnchor& a = anchors_[hi - 1];
  const LeakageAnchor& b = anchors_[hi];
  if (v_g == a.v_g) return pick(a);
  if (v_g == b.v_g) return pick(b);
  double frac = (v_g - a.v_g) / (b.v_g - a.v_g);
  double la = std::log(pick(a));
  double lb = std::log(pick(b));
  return std::exp(la + frac * (lb - la));
}

LeakageCalibration fit_leakage_calibration(std::vector<LeakageAnchor> anchors) {
  if (anchors.size() < 2) throw ValidationError("leakage calibration needs at least 2 anchors");
  for (const auto& a : anchors) {
    if (!std::isfinite(a.v_g)) throw ValidationError("leakage anchor V_G must be finite");
    if (!(a.slope_up > 0.0) || !(a.slope_down > 0.0) || !std::isfinite(a.slope_up) ||
        !std::isfinite(a.slope_down)) {
      throw ValidationError("leakage anchor at " + fmt_volts(a.v_g) + " has a non-positive slope");
    }
  }
  std::sort(anchors.begin(), anchors.end(),
            [](const LeakageAnchor& x, const LeakageAnchor& y) { return x.v_g < y.v_g; });
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    if (anchors[i].v_g == anchors[i - 1].v_g)
      throw ValidationError("duplicate leakage anchor at " + fmt_volts(anchors[i].v_g));
  }
  // Slope must not grow with V_G; a rising segment contradicts the cell physics.
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    if (anchors[i].slope_up > anchors[i - 1].slope_up ||
        anchors[i].slope_down > anchors[i - 1].slope_down) {
      throw ValidationError("leakage slopes must be non-increasing in V_G (anchor " +
                            fmt_volts(anchors[i].v_g) + ")");
    }
  }
  LeakageCalibration calib;
  calib.anchors_ = std::move(anchors);
  return calib;
}

std::vector<LeakageAnchor> default_leakage_anchors(const DeviceParams& dev) {
  // Slope that recovers a 2x drive step in 60 s.
  const double fast = dev.log_voltage_scale() * std::log(2.0) / 60.0;
  return {{1.42, fast, fast}, {1.72, 1.5e-6, 0.45e-6}};
}

double llc_slope(double v_g, RampDirection dir, const LeakageCalibration& calib,
                 const LeakageCellParams& cell) {
  const double parasitic = dir == RampDirection::up ? cell.i_parasitic_up : cell.i_parasitic_down;
  return calib.slope(v_g, dir) + parasitic / cell.c_f;
}

}  // namespace homeoscale
