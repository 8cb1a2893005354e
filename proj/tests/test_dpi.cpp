#include <doctest.h>

#include <cmath>
#include <vector>

#include "homeoscale/dpi.h"
#include "homeoscale/errors.h"
#include "oracles.h"

using namespace homeoscale;

namespace {
const DeviceParams kDev;
const DpiParams kDpi;
}  // namespace

TEST_CASE("dpi time constant") {
  const double tau = dpi_time_constant(kDpi, kDev);
  CHECK(oracle::rel(tau, 1e-12 * 0.0258 / (0.7 * 1e-11)) < 1e-15);
  CHECK(tau == doctest::Approx(3.686e-3).epsilon(1e-3));
  DpiParams p = kDpi;
  p.i_tau *= 2.0;
  CHECK(oracle::rel(dpi_time_constant(p, kDev), tau / 2.0) < 1e-15);
  p = kDpi;
  p.c_dpi = 2e-12;
  CHECK(oracle::rel(dpi_time_constant(p, kDev), tau * 2.0) < 1e-15);
}

TEST_CASE("total_weight_current sums the DC branch and active synapses") {
  SynapseBank bank;
  bank.i_dc = 0.3e-9;
  CHECK(total_weight_current(bank, {}) == 0.3e-9);
  SynapseBank empty;
  CHECK(total_weight_current(empty, {}) == 0.0);
  SynapseBank two;
  two.weights = {1e-9, 1e-9, 5e-9};
  const std::vector<std::size_t> active = {0, 1};
  CHECK(total_weight_current(two, active) == doctest::Approx(2e-9));
  const std::vector<std::size_t> bad = {3};
  CHECK_THROWS_AS(total_weight_current(two, bad), ValidationError);
}

TEST_CASE("steady state at the 20 nA operating point") {
  const double ss = dpi_steady_state(0.3e-9, 0.667e-9, kDpi);
  CHECK(ss == doctest::Approx(20e-9).epsilon(1e-3));
  CHECK(dpi_steady_state(0.0, 1e-9, kDpi) == 0.0);
  CHECK(oracle::rel(dpi_steady_state(0.6e-9, 0.667e-9, kDpi), 2.0 * ss) < 1e-15);
}

TEST_CASE("dpi_evolve") {
  const DpiState s0{0.0, 0.0};
  const double tau = dpi_time_constant(kDpi, kDev);
  const double ss = dpi_steady_state(0.3e-9, 0.667e-9, kDpi);

  SUBCASE("zero step is the identity") {
    const DpiState s{12e-9, 3.0};
    const DpiState r = dpi_evolve(s, 0.0, 0.3e-9, 0.667e-9, kDpi, kDev);
    CHECK(r.i_syn == s.i_syn);
    CHECK(r.t == s.t);
  }
  SUBCASE("one time constant reaches 1 - 1/e") {
    const DpiState r = dpi_evolve(s0, tau, 0.3e-9, 0.667e-9, kDpi, kDev);
    CHECK(oracle::rel(r.i_syn, (1.0 - std::exp(-1.0)) * ss) < 1e-12);
    CHECK(r.t == tau);
  }
  SUBCASE("agrees with a dense forward-Euler oracle over 5 tau") {
    const DpiState r = dpi_evolve(s0, 5.0 * tau, 0.3e-9, 0.667e-9, kDpi, kDev);
    const double ref = oracle::euler_first_order(0.0, ss, tau, 5.0 * tau, 50000);
    CHECK(oracle::rel(r.i_syn, ref) < 1e-3);
  }
  SUBCASE("negative step is rejected") {
    CHECK_THROWS_AS(dpi_evolve(s0, -1e-3, 0.3e-9, 0.667e-9, kDpi, kDev), DomainError);
  }
}

TEST_CASE("dpi_crossing_time") {
  const double tau = dpi_time_constant(kDpi, kDev);
  const double ss = dpi_steady_state(0.3e-9, 0.667e-9, kDpi);
  const DpiState s0{0.0, 0.0};
  CHECK(dpi_crossing_time({5e-9, 0.0}, 5e-9, 0.3e-9, 0.667e-9, kDpi, kDev) == 0.0);
  CHECK_FALSE(dpi_crossing_time(s0, ss, 0.3e-9, 0.667e-9, kDpi, kDev).has_value());
  const auto half = dpi_crossing_time(s0, 0.5 * ss, 0.3e-9, 0.667e-9, kDpi, kDev);
  REQUIRE(half.has_value());
  CHECK(oracle::rel(*half, tau * std::log(2.0)) < 1e-12);
  // Beyond the asymptote or on the wrong side: unreachable.
  CHECK_FALSE(dpi_crossing_time(s0, 2.0 * ss, 0.3e-9, 0.667e-9, kDpi, kDev).has_value());
  CHECK_FALSE(dpi_crossing_time({10e-9, 0.0}, 5e-9, 0.3e-9, 0.667e-9, kDpi, kDev).has_value());
}

TEST_CASE("synaptic voltage uses the global I0") {
  const double v = synaptic_voltage(20e-9, kDev);
  CHECK(oracle::rel(v, 1.8 - 0.0258 / 0.7 * std::log(20e-9 / 1e-16)) < 1e-14);
  CHECK_THROWS_AS(synaptic_voltage(0.0, kDev), DomainError);
}

TEST_CASE("ramped segment matches a dense Euler oracle") {
  // tau I' + I = drive exp(-lambda t), both signs of lambda, incl. resonance.
  const double tau = dpi_time_constant(kDpi, kDev);
  for (double lambda : {0.0, 5.0, -3.0, 1.0 / tau, 400.0}) {
    const DpiSegment seg{12e-9, 20e-9, lambda, tau};
    const double t_end = 0.02;
    const std::size_t n = 200000;
    const double h = t_end / static_cast<double>(n);
    double i = seg.i_start;
    double q = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * h;
      const double u = seg.drive * std::exp(-lambda * t);
      const double next = i + h / tau * (u - i);
      q += 0.5 * (i + next) * h;
      i = next;
    }
    CAPTURE(lambda);
    CHECK(oracle::rel(seg.value(t_end), i) < 1e-4);
    CHECK(oracle::rel(seg.charge(t_end), q) < 1e-4);
  }
}

TEST_CASE("ramped segment reduces to dpi_evolve without a ramp") {
  const DpiSegment seg = ramped_segment(3e-9, 0.3e-9, 0.667e-9, 0.0, kDpi, kDev);
  const DpiState r = dpi_evolve({3e-9, 0.0}, 0.01, 0.3e-9, 0.667e-9, kDpi, kDev);
  CHECK(oracle::rel(seg.value(0.01), r.i_syn) < 1e-13);
}

TEST_CASE("first crossing on a rising-then-falling trajectory") {
  const double tau = dpi_time_constant(kDpi, kDev);
  // Starts low, drive pulls up while the gain decays fast: one interior maximum.
  const DpiSegment seg{10e-9, 40e-9, 50.0, tau};
  const auto peak = seg.extremum();
  REQUIRE(peak.has_value());
  CHECK(std::abs(seg.derivative(*peak)) < 1e-9 * 40e-9 / tau);
  const double peak_value = seg.value(*peak);
  const double level = 0.5 * (10e-9 + peak_value);

  const auto up = seg.first_crossing(level, false, 1.0);
  REQUIRE(up.has_value());
  CHECK(*up < *peak);
  CHECK(oracle::rel(seg.value(*up), level) < 1e-12);

  // The same level is never left from above first; no crossing of a level
  // above the peak.
  CHECK_FALSE(seg.first_crossing(peak_value * 1.01, false, 1.0).has_value());
  // Downward crossing after the peak for a level below the start.
  const auto down = seg.first_crossing(5e-9, true, 1.0);
  REQUIRE(down.has_value());
  CHECK(*down > *peak);
  CHECK(oracle::rel(seg.value(*down), 5e-9) < 1e-12);
}
