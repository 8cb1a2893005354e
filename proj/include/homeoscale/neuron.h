#pragma once

#include <optional>
#include <vector>

namespace homeoscale {

// Charge-accumulation integrate-and-fire neuron with a refractory period and
// an optional spike-triggered threshold increment that decays with adapt_tau.
struct NeuronParams {
  double q_th = 1.7777777777777777e-10;  // C, charge to threshold
  double i_leak = 0.0;                   // A, constant membrane leak
  double rho = 1.1111111111111111e-3;    // s, refractory period
  double adapt_q = 0.0;                  // C added to the threshold per spike
  double adapt_tau = 1.0;                // s, decay of the threshold increment

  void validate() const;
};

struct NeuronState {
  double t = 0.0;  // time at which q and adaptation are valid
  double q = 0.0;
  double adaptation = 0.0;
  double refractory_until = 0.0;
  double rate_estimate = 0.0;
  bool has_rate = false;
  std::optional<double> last_spike;
};

struct RatePoint {
  double current;  // A
  double rate;     // Hz
};

// Steady firing rate under constant drive: 1 / (rho + Q_th / (I - I_leak)).
double rate_from_current(double current, const NeuronParams& p);

// Drive needed for a steady rate; inverse of rate_from_current.
double current_for_rate(double rate, const NeuronParams& p);

// Solves 1/f = rho + Q_th / I through two observations; leak and adaptation
// are zero in the result.
NeuronParams calibrate_neuron(RatePoint a, RatePoint b);

// First threshold crossing in [s.t, t1] under constant drive, honouring the
// refractory window. Does not modify the state.
std::optional<double> next_spike_time(const NeuronState& s, double t1, double current,
                                      const NeuronParams& p);

// Time-weighted exponential average of inverse inter-spike intervals.
double update_rate_estimate(NeuronState& s, double spike_t, double window);

// Advances the neuron to t1 under constant drive, firing every spike on the
// way. Returns the spike times.
std::vector<double> integrate_neuron(NeuronState& s, double t1, double current,
                                     const NeuronParams& p, double window);

}  // namespace homeoscale
