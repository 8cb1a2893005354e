#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homeoscale/engine.h"
#include "homeoscale/experiment.h"

namespace homeoscale {

// Sectioned key-value configuration:
//
//   [section]
//   key = value    # values are JSON (numbers, arrays, true/false, null)
//                  # or bare words
//
// Keys are stored as "section.key"; unknown keys are rejected.
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value_text);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string* get(const std::string& key) const;
  // Keys from `over` replace ours.
  void merge(const RunConfig& over);
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

struct KeyInfo {
  std::string_view key;
  std::string_view default_text;
  std::string_view doc;
  bool sweepable;  // numeric scalar
};

std::span<const KeyInfo> config_keys();
std::vector<std::string> sweepable_keys();
bool is_known_key(const std::string& key);
// Every key with its default and meaning, grouped by section.
std::string config_help();

std::vector<std::string> protocol_names();
// Built-in settings a named protocol layers under the user configuration.
RunConfig protocol_defaults(const std::string& name);

struct RunSetup {
  Experiment experiment;
  EngineTolerances tolerances;
};

// Resolves defaults <- protocol defaults <- user keys, runs the protocol
// builder and applies explicit schedule keys on top. Throws ValidationError.
RunSetup build_run(const RunConfig& user);

}  // namespace homeoscale
