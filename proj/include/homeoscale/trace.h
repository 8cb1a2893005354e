#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace homeoscale {

struct TraceRow {
  double t = 0.0;
  double i_syn = 0.0;
  double v_thr = 0.0;
  bool sw = false;
  double rate = 0.0;
  double i_w_total = 0.0;
  double i_gain = 0.0;
  double i_dc = 0.0;
};

struct TraceMeta {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string protocol;
  std::string spike_mode;
  std::uint64_t segments = 0;
  std::uint64_t toggles = 0;
  std::uint64_t spikes = 0;
  std::uint64_t validity_warnings = 0;  // segments with I_syn < 10 I_gain
  std::uint64_t gain_saturations = 0;
  std::uint64_t rail_hits = 0;
  double max_toggle_discontinuity = 0.0;  // V
};

// Sampled run record. Rows are strictly increasing in t. `weights` (one
// vector per row) and `spikes` are kept in memory only; the CSV carries the
// fixed column set.
struct Trace {
  std::vector<TraceRow> rows;
  std::vector<std::vector<double>> weights;
  std::vector<double> spikes;
  TraceMeta meta;

  // Appends, or replaces the last row when t does not advance.
  void record(const TraceRow& row, const std::vector<double>& w);
};

inline constexpr const char* kTraceHeader = "t,i_syn,v_thr,sw,rate,i_w_total,i_gain,i_dc";

// 12 significant digits, shortest of fixed/scientific.
std::string format_number(double v);

void write_trace_csv(const Trace& trace, std::ostream& out);
std::vector<TraceRow> read_trace_csv(std::istream& in);

void write_meta(const TraceMeta& meta, std::ostream& out);

}  // namespace homeoscale
