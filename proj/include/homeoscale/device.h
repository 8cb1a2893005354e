#pragma once

#include <span>
#include <vector>

namespace homeoscale {

inline constexpr double kElectronCharge = 1.602176634e-19;  // C

// Global transistor-law constants. Voltages in V, currents in A.
struct DeviceParams {
  double u_t = 0.0258;  // thermal voltage at 300 K
  double kappa = 0.7;   // subthreshold slope coefficient
  double i0 = 1e-16;    // subthreshold prefactor
  double vdd = 1.8;
  double q_e = kElectronCharge;

  void validate() const;

  // U_T / kappa: gate swing per e-fold of subthreshold current.
  double log_voltage_scale() const { return u_t / kappa; }
};

struct GainEval {
  double current;
  bool saturated;  // exponent hit the +-700 clamp
};

// Global synaptic gain current controlled by V_THR:
//   I_gain = I0 * exp(kappa * (Vdd - V_THR) / U_T)
double gain_current(double v_thr, const DeviceParams& dev);
GainEval gain_current_checked(double v_thr, const DeviceParams& dev);

// Inverse of gain_current.
double threshold_for_gain(double i_gain, const DeviceParams& dev);

double electrons_per_second(double current, const DeviceParams& dev);

enum class RampDirection { up, down };

// Low-leakage cell around the integration capacitor. The parasitic terms lump
// drain-bulk diffusion and gate leakage into one extra current per direction.
struct LeakageCellParams {
  double c_f = 1e-12;
  double v_g = 1.42;
  double i_parasitic_up = 0.0;
  double i_parasitic_down = 0.0;

  // Gate-leakage estimate of the cell; parasitic terms may not exceed it.
  static constexpr double kParasiticCeiling = 0.1e-18;

  void validate() const;
};

struct LeakageAnchor {
  double v_g;
  double slope_up;    // V/s, magnitude
  double slope_down;  // V/s, magnitude
};

// Piecewise log-linear model of ramp slope versus LLC gate voltage. Passes
// exactly through every anchor; the outer segments extrapolate up to
// kGuard volts beyond the anchor range.
class LeakageCalibration {
 public:
  static constexpr double kGuard = 0.2;

  LeakageCalibration() = default;

  std::span<const LeakageAnchor> anchors() const { return anchors_; }
  double min_v_g() const;
  double max_v_g() const;
  bool in_guard(double v_g) const;

  // Calibrated |dV_THR/dt| without parasitic terms.
  double slope(double v_g, RampDirection dir) const;

 private:
  friend LeakageCalibration fit_leakage_calibration(std::vector<LeakageAnchor>);
  std::vector<LeakageAnchor> anchors_;
};

LeakageCalibration fit_leakage_calibration(std::vector<LeakageAnchor> anchors);

// Default anchors: the slope giving a 60 s recovery from a 2x step at 1.42 V and the
// measured deep-subthreshold slopes at 1.72 V.
std::vector<LeakageAnchor> default_leakage_anchors(const DeviceParams& dev = {});

// |dV_THR/dt| = (|I_DS| + I_parasitic) / C_F for the requested direction.
double llc_slope(double v_g, RampDirection dir, const LeakageCalibration& calib,
                 const LeakageCellParams& cell);

}  // namespace homeoscale
