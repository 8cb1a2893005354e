#include "homeoscale/cli.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "homeoscale/config.h"
#include "homeoscale/engine.h"
#include "homeoscale/errors.h"
#include "homeoscale/rng.h"

namespace homeoscale {

namespace fs = std::filesystem;

namespace {

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (text.empty() || text[0] == '-') throw std::invalid_argument("sign");
    v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    throw ValidationError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  if (used != text.size())
    throw ValidationError(what + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

std::uint64_t resolve_seed(const RunArgs& args) {
  if (args.seed) return *args.seed;
  if (const char* env = std::getenv("HOMEOSCALE_SEED")) return parse_seed(env, "HOMEOSCALE_SEED");
  return 0;
}

RunConfig assemble_config(const RunArgs& args) {
  RunConfig cfg;
  for (const auto& path : args.configs) cfg.merge(load_config(path));
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
    std::string key = s.substr(0, eq);
    std::string value = s.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    // Parse as a one-line file so the value gets the usual checks.
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ValidationError("unknown config key '" + key + "'");
    cfg.merge(parse_config("[" + key.substr(0, dot) + "]\n" + key.substr(dot + 1) + " = " + value,
                           "--set"));
  }
  return cfg;
}

struct RunOutput {
  std::string trace_csv;
  std::string metrics;
  std::string meta;
  std::string config;
  RunMetrics metrics_value;
  TraceMeta meta_value;
};

RunOutput execute(const RunSetup& setup, std::uint64_t seed) {
  const Trace trace = run(setup.experiment, setup.tolerances, seed);
  RunOutput out;
  out.metrics_value = extract_metrics(trace, setup.experiment);
  out.meta_value = trace.meta;
  std::ostringstream t, m, x;
  write_trace_csv(trace, t);
  write_metrics(out.metrics_value, m);
  write_meta(trace.meta, x);
  out.trace_csv = t.str();
  out.metrics = m.str();
  out.meta = x.str();
  out.config = canonical_text(setup.experiment);
  return out;
}

void write_outputs(const std::string& dir, const RunOutput& r) {
  fs::create_directories(dir);
  write_file_atomic((fs::path(dir) / "trace.csv").string(), r.trace_csv);
  write_file_atomic((fs::path(dir) / "metrics.txt").string(), r.metrics);
  write_file_atomic((fs::path(dir) / "meta.txt").string(), r.meta);
  write_file_atomic((fs::path(dir) / "config.cfg").string(), r.config);
}

std::string csv_number(double v) { return std::isnan(v) ? "nan" : format_number(v); }

// Maps exceptions to exit codes with a one-line diagnostic.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + tmp + "'");
    f << content;
    f.flush();
    if (!f) throw Error("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  RunSetup setup;
  std::uint64_t seed = 0;
  int code = guarded(err, [&] {
    if (args.out_dir.empty()) throw ValidationError("--out is required");
    seed = resolve_seed(args);
    setup = build_run(assemble_config(args));
    return int(kExitOk);
  });
  if (code != kExitOk) return code;
  return guarded(err, [&] {
    const RunOutput r = execute(setup, seed);
    write_outputs(args.out_dir, r);
    out << "wrote " << args.out_dir << " (" << r.meta_value.segments << " segments, "
        << r.meta_value.toggles << " toggles)\n";
    return int(kExitOk);
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<RunSetup> setups;
  std::uint64_t base_seed = 0;
  int code = guarded(err, [&] {
    if (args.base.out_dir.empty()) throw ValidationError("--out is required");
    const auto keys = sweepable_keys();
    if (std::find(keys.begin(), keys.end(), args.param) == keys.end()) {
      std::string list;
      for (const auto& k : keys) list += " " + k;
      throw ValidationError("'" + args.param + "' is not sweepable; sweepable keys:" + list);
    }
    if (args.values.empty()) throw ValidationError("--values must list at least one value");
    base_seed = resolve_seed(args.base);
    for (const auto& value : args.values) {
      RunArgs one = args.base;
      one.sets.push_back(args.param + "=" + value);
      setups.push_back(build_run(assemble_config(one)));
    }
    return int(kExitOk);
  });
  if (code != kExitOk) return code;

  const std::size_t n = setups.size();
  std::vector<RunOutput> results(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = execute(setups[i], derive_seed(base_seed, i));
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", i);
        write_outputs((fs::path(args.base.out_dir) / name).string(), results[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(args.jobs, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i]) continue;
    return guarded(err, [&]() -> int { std::rethrow_exception(failures[i]); });
  }

  return guarded(err, [&] {
    std::ostringstream s;
    s << "index,value,seed,segments,toggles,recovery_times,peak_rate,settled_rate,"
         "locked_toggle_freq,weight_ratio_drift,slope_up,slope_down\n";
    for (std::size_t i = 0; i < n; ++i) {
      const RunMetrics& m = results[i].metrics_value;
      std::string rec;
      for (std::size_t k = 0; k < m.recovery_times.size(); ++k)
        rec += (k ? ";" : "") + csv_number(m.recovery_times[k]);
      s << i << ',' << args.values[i] << ',' << derive_seed(base_seed, i) << ','
        << results[i].meta_value.segments << ',' << results[i].meta_value.toggles << ','
        << rec << ',' << format_number(m.peak_rate) << ',' << format_number(m.settled_rate)
        << ',' << format_number(m.locked_toggle_freq) << ',' << format_number(m.weight_ratio_drift)
        << ',' << (m.slope_up ? format_number(*m.slope_up) : "nan") << ','
        << (m.slope_down ? format_number(*m.slope_down) : "nan") << '\n';
    }
    write_file_atomic((fs::path(args.base.out_dir) / "summary.csv").string(), s.str());
    out << "wrote " << n << " runs to " << args.base.out_dir << '\n';
    return int(kExitOk);
  });
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.out_path.empty()) throw ValidationError("--out is required");
    std::ifstream f(args.anchor_file);
    if (!f) throw ValidationError("cannot read anchor file '" + args.anchor_file + "'");
    std::vector<LeakageAnchor> anchors;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      line = line.substr(0, line.find('#'));
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      for (char& c : line)
        if (c == ',') c = ' ';
      std::istringstream ls(line);
      LeakageAnchor a{};
      std::string extra;
      if (!(ls >> a.v_g >> a.slope_up >> a.slope_down)) {
        if (anchors.empty() && lineno == 1) continue;  // header row
        throw ValidationError(args.anchor_file + ":" + std::to_string(lineno) +
                              ": expected v_g, slope_up, slope_down");
      }
      if (ls >> extra)
        throw ValidationError(args.anchor_file + ":" + std::to_string(lineno) +
                              ": unexpected trailing field");
      anchors.push_back(a);
    }
    const LeakageCalibration calib = fit_leakage_calibration(anchors);

    std::ostringstream section;
    section << "[leakage]\nanchors = [";
    char buf[96];
    bool first = true;
    for (const auto& a : calib.anchors()) {
      std::snprintf(buf, sizeof buf, "[%.17g, %.17g, %.17g]", a.v_g, a.slope_up, a.slope_down);
      section << (first ? "" : ", ") << buf;
      first = false;
      const double r_up = calib.slope(a.v_g, RampDirection::up) / a.slope_up - 1.0;
      const double r_down = calib.slope(a.v_g, RampDirection::down) / a.slope_down - 1.0;
      out << "anchor v_g=" << format_number(a.v_g) << " residual_up=" << format_number(r_up)
          << " residual_down=" << format_number(r_down) << '\n';
    }
    section << "]\n";
    const fs::path parent = fs::path(args.out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_file_atomic(args.out_path, section.str());
    return int(kExitOk);
  });
}

}  // namespace homeoscale
