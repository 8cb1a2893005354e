#include "homeoscale/neuron.h"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/toms748_solve.hpp>

#include "homeoscale/errors.h"

namespace homeoscale {

void NeuronParams::validate() const {
  if (!(q_th > 0.0)) throw ValidationError("neuron.q_th must be > 0");
  if (!(rho >= 0.0)) throw ValidationError("neuron.rho must be >= 0");
  if (!(i_leak >= 0.0)) throw ValidationError("neuron.i_leak must be >= 0");
  if (!(adapt_q >= 0.0)) throw ValidationError("neuron.adapt_q must be >= 0");
  if (!(adapt_tau > 0.0)) throw ValidationError("neuron.adapt_tau must be > 0");
}

double rate_from_current(double current, const NeuronParams& p) {
  if (current <= p.i_leak) return 0.0;
  return 1.0 / (p.rho + p.q_th / (current - p.i_leak));
}

double current_for_rate(double rate, const NeuronParams& p) {
  if (rate < 0.0) throw DomainError("current_for_rate: rate must be >= 0");
  if (rate == 0.0) return p.i_leak;
  const double period = 1.0 / rate;
  if (period <= p.rho) throw DomainError("current_for_rate: rate at or above the refractory ceiling");
  return p.i_leak + p.q_th / (period - p.rho);
}

NeuronParams calibrate_neuron(RatePoint a, RatePoint b) {
  if (!(a.rate > 0.0) || !(b.rate > 0.0))
    throw CalibrationError("calibration rates must be > 0");
  if (!(a.current > 0.0) || !(b.current > 0.0))
    throw CalibrationError("calibration currents must be > 0");
  if (a.current == b.current) throw CalibrationError("calibration currents must differ");
  if (a.rate == b.rate) throw CalibrationError("calibration rates must differ");
  if ((a.current < b.current) != (a.rate < b.rate))
    throw CalibrationError("calibration points must have the higher rate at the higher current");

  const double q = (1.0 / a.rate - 1.0 / b.rate) / (1.0 / a.current - 1.0 / b.current);
  double rho = 1.0 / a.rate - q / a.current;
  // Proportional points land on rho = 0 up to rounding.
  if (rho < 0.0 && rho > -1e-12 / a.rate) rho = 0.0;
  if (!(q > 0.0) || rho < 0.0)
    throw CalibrationError("calibration points imply a negative refractory period");
  NeuronParams p;
  p.q_th = q;
  p.rho = rho;
  p.i_leak = 0.0;
  p.adapt_q = 0.0;
  return p;
}

std::optional<double> next_spike_time(const NeuronState& s, double t1, double current,
                                      const NeuronParams& p) {
  const double start = std::max(s.t, s.refractory_until);
  if (start > t1) return std::nullopt;
  const double net = std::max(current - p.i_leak, 0.0);

  if (s.adaptation == 0.0) {
    const double need = p.q_th - s.q;
    if (need <= 0.0) return start;
    if (net == 0.0) return std::nullopt;
    const double ts = start + need / net;
    if (ts > t1) return std::nullopt;
    return ts;
  }

  const double a0 = s.adaptation * std::exp(-(start - s.t) / p.adapt_tau);
  auto g = [&](double t) {
    return s.q + net * (t - start) - p.q_th - a0 * std::exp(-(t - start) / p.adapt_tau);
  };
  const double g0 = g(start);
  if (g0 >= 0.0) return start;
  const double g1 = g(t1);
  if (g1 < 0.0) return std::nullopt;
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(g, start, t1, g0, g1,
                                             boost::math::tools::eps_tolerance<double>(52), iters);
  return r.second;
}

double update_rate_estimate(NeuronState& s, double spike_t, double window) {
  if (s.last_spike && spike_t < *s.last_spike)
    throw OrderingError("update_rate_estimate: spike time precedes the previous spike");
  if (s.last_spike) {
    const double isi = spike_t - *s.last_spike;
    if (isi > 0.0) {
      const double inst = 1.0 / isi;
      if (!s.has_rate) {
        s.rate_estimate = inst;
        s.has_rate = true;
      } else {
        const double alpha = -std::expm1(-isi / window);
        s.rate_estimate += alpha * (inst - s.rate_estimate);
      }
    }
  }
  s.last_spike = spike_t;
  return s.rate_estimate;
}

std::vector<double> integrate_neuron(NeuronState& s, double t1, double current,
                                     const NeuronParams& p, double window) {
  std::vector<double> spikes;
  const double net = std::max(current - p.i_leak, 0.0);
  auto decay_to = [&](double t) {
    if (s.adaptation != 0.0) s.adaptation *= std::exp(-(t - s.t) / p.adapt_tau);
    s.t = t;
  };
  while (true) {
    auto ts = next_spike_time(s, t1, current, p);
    if (!ts) {
      const double start = std::max(s.t, s.refractory_until);
      if (start < t1) s.q = std::min(s.q + net * (t1 - start), p.q_th + s.adaptation);
      if (t1 > s.t) decay_to(t1);
      break;
    }
    decay_to(*ts);
    s.adaptation += p.adapt_q;
    s.q = 0.0;
    s.refractory_until = *ts + p.rho;
    update_rate_estimate(s, *ts, window);
    spikes.push_back(*ts);
  }
  return spikes;
}

}  // namespace homeoscale
