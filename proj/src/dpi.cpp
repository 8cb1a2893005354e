#include "homeoscale/dpi.h"

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "homeoscale/errors.h"

namespace homeoscale {

namespace {

// expm1(x) / x, continuous at 0.
double expm1_ratio(double x) {
  if (x == 0.0) return 1.0;
  return std::expm1(x) / x;
}

}  // namespace

void DpiParams::validate() const {
  if (!(c_dpi > 0.0)) throw ValidationError("dpi.c_dpi must be > 0");
  if (!(i_tau > 0.0)) throw ValidationError("dpi.i_tau must be > 0");
}

void SynapseBank::validate() const {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0))
      throw ValidationError("synapses.weights[" + std::to_string(i) + "] must be >= 0");
  }
  if (!(pulse_width > 0.0)) throw ValidationError("synapses.pulse_width must be > 0");
  if (!(i_dc >= 0.0)) throw ValidationError("synapses.i_dc must be >= 0");
}

double dpi_time_constant(const DpiParams& p, const DeviceParams& dev) {
  return p.c_dpi * dev.u_t / (dev.kappa * p.i_tau);
}

double total_weight_current(const SynapseBank& bank, std::span<const std::size_t> active_pulses) {
  double total = bank.i_dc;
  for (std::size_t idx : active_pulses) {
    if (idx >= bank.weights.size())
      throw ValidationError("synapse index " + std::to_string(idx) + " out of range");
    total += bank.weights[idx];
  }
  return total;
}

double dpi_steady_state(double i_w, double i_gain, const DpiParams& p) {
  return i_w * i_gain / p.i_tau;
}

DpiState dpi_evolve(const DpiState& s, double dt, double i_w, double i_gain, const DpiParams& p,
                    const DeviceParams& dev) {
  if (dt < 0.0) throw DomainError("dpi_evolve: dt must be >= 0");
  if (dt == 0.0) return s;
  const double tau = dpi_time_constant(p, dev);
  const double ss = dpi_steady_state(i_w, i_gain, p);
  return {ss + (s.i_syn - ss) * std::exp(-dt / tau), s.t + dt};
}

std::optional<double> dpi_crossing_time(const DpiState& s, double i_target, double i_w,
                                        double i_gain, const DpiParams& p,
                                        const DeviceParams& dev) {
  if (s.i_syn == i_target) return 0.0;
  const double ss = dpi_steady_state(i_w, i_gain, p);
  const double from = s.i_syn - ss;
  const double to = i_target - ss;
  // Target must sit strictly between the start and the asymptote.
  if (to == 0.0 || (from > 0.0) != (to > 0.0) || std::abs(to) > std::abs(from)) return std::nullopt;
  return dpi_time_constant(p, dev) * std::log(from / to);
}

double synaptic_voltage(double i_syn, const DeviceParams& dev) {
  if (!(i_syn > 0.0)) throw DomainError("synaptic_voltage: current must be > 0");
  return dev.vdd - dev.log_voltage_scale() * std::log(i_syn / dev.i0);
}

double DpiSegment::value(double t) const {
  const double decay = std::exp(-t / tau);
  const double mu = 1.0 / tau - gain_rate;
  const double x = mu * t;
  double forced;
  if (std::abs(x) <= 1.0) {
    forced = drive * decay * (t / tau) * expm1_ratio(x);
  } else {
    forced = drive * (std::exp(-gain_rate * t) - decay) / (1.0 - gain_rate * tau);
  }
  return i_start * decay + forced;
}

double DpiSegment::derivative(double t) const {
  return (drive * std::exp(-gain_rate * t) - value(t)) / tau;
}

double DpiSegment::charge(double t) const {
  // Integrate the ODE: int I = int u - tau * (I(t) - I(0)).
  const double input = drive * t * expm1_ratio(-gain_rate * t);
  return input - tau * (value(t) - i_start);
}

std::optional<double> DpiSegment::extremum() const {
  if (gain_rate == 0.0 || drive == 0.0) return std::nullopt;
  const double resonance = 1.0 - gain_rate * tau;
  double t;
  if (std::abs(resonance) < 1e-9) {
    // I = (I0 + drive t / tau) exp(-t / tau)
    t = tau * (drive - i_start) / drive;
  } else {
    const double a = drive / resonance;
    const double b = i_start - a;
    const double arg = -b / (tau * gain_rate * a);
    if (!(arg > 0.0)) return std::nullopt;
    t = std::log(arg) / (1.0 / tau - gain_rate);
  }
  if (!(t > 0.0) || !std::isfinite(t)) return std::nullopt;
  return t;
}

std::optional<double> DpiSegment::first_crossing(double level, bool from_above,
                                                 double t_max) const {
  const double side = from_above ? 1.0 : -1.0;
  // g > 0 on the side being left.
  auto g = [&](double t) { return side * (value(t) - level); };

  double cuts[3] = {0.0, t_max, t_max};
  int n = 2;
  if (auto te = extremum(); te && *te < t_max) {
    cuts[1] = *te;
    n = 3;
  }
  // Each piece is monotone, so a sign change at its ends brackets the only root.
  for (int k = 0; k + 1 < n; ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    const double ga = g(a);
    const double gb = g(b);
    if (ga <= 0.0) {
      if (k > 0) return a;
      if (side * derivative(0.0) < 0.0) return 0.0;
      continue;  // sitting on the level but heading back
    }
    if (gb >= 0.0) continue;
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb,
                                               boost::math::tools::eps_tolerance<double>(52),
                                               iters);
    return 0.5 * (r.first + r.second);
  }
  return std::nullopt;
}

DpiSegment ramped_segment(double i_start, double i_w, double i_gain_start, double gain_rate,
                          const DpiParams& p, const DeviceParams& dev) {
  return {i_start, dpi_steady_state(i_w, i_gain_start, p), gain_rate, dpi_time_constant(p, dev)};
}

}  // namespace homeoscale
