#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace homeoscale {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

struct RunArgs {
  std::vector<std::string> configs;  // merged left to right
  std::vector<std::string> sets;     // "section.key=value" overrides, applied last
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // falls back to HOMEOSCALE_SEED, then 0
};

struct SweepArgs {
  RunArgs base;
  std::string param;
  std::vector<std::string> values;
  unsigned jobs = 1;
};

struct CalibrateArgs {
  std::string anchor_file;  // CSV lines: v_g, slope_up, slope_down
  std::string out_path;
};

// Each command reports one diagnostic line on `err` and returns an exit code.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err);

// Writes `content` to a temporary sibling, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace homeoscale
