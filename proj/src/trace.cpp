#include "homeoscale/trace.h"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "homeoscale/errors.h"

namespace homeoscale {

namespace {

constexpr const char* kModuleVersions =
    "device=1 dpi=1 neuron=1 agc=1 engine=1 experiments=1 cli=1";

double parse_field(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ValidationError("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void Trace::record(const TraceRow& row, const std::vector<double>& w) {
  if (!rows.empty() && !(row.t > rows.back().t)) {
    rows.back() = row;
    weights.back() = w;
    return;
  }
  rows.push_back(row);
  weights.push_back(w);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << format_number(r.t) << ',' << format_number(r.i_syn) << ',' << format_number(r.v_thr)
        << ',' << (r.sw ? 1 : 0) << ',' << format_number(r.rate) << ','
        << format_number(r.i_w_total) << ',' << format_number(r.i_gain) << ','
        << format_number(r.i_dc) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ValidationError("trace header mismatch");
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8)
      throw ValidationError("trace line " + std::to_string(lineno) + ": expected 8 columns");
    TraceRow r;
    r.t = parse_field(f[0], lineno);
    r.i_syn = parse_field(f[1], lineno);
    r.v_thr = parse_field(f[2], lineno);
    r.sw = parse_field(f[3], lineno) != 0.0;
    r.rate = parse_field(f[4], lineno);
    r.i_w_total = parse_field(f[5], lineno);
    r.i_gain = parse_field(f[6], lineno);
    r.i_dc = parse_field(f[7], lineno);
    rows.push_back(r);
  }
  return rows;
}

void write_meta(const TraceMeta& meta, std::ostream& out) {
  out << "seed = " << meta.seed << '\n'
      << "config_digest = " << meta.config_digest << '\n'
      << "protocol = " << meta.protocol << '\n'
      << "spike_mode = " << meta.spike_mode << '\n'
      << "segments = " << meta.segments << '\n'
      << "toggles = " << meta.toggles << '\n'
      << "spikes = " << meta.spikes << '\n'
      << "validity_warnings = " << meta.validity_warnings << '\n'
      << "gain_saturations = " << meta.gain_saturations << '\n'
      << "rail_hits = " << meta.rail_hits << '\n'
      << "max_toggle_discontinuity = " << format_number(meta.max_toggle_discontinuity) << '\n'
      << "module_versions = " << kModuleVersions << '\n';
}

}  // namespace homeoscale
