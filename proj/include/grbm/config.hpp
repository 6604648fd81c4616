#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "grbm/ais.hpp"
#include "grbm/training.hpp"

namespace grbm {

// Flat "key = value" document. '#' starts a comment; blank lines are skipped.
// Keys mirror TrainConfig field names; nested fields are prefixed
// ("momentum.initial", "monitor_ais.num_betas", and "ais.num_chains" for a
// standalone AisConfig). Every lookup marks its key as
// used so that leftovers can be reported.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<double>> get_doubles(const std::string& key) const;

  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// Overwrites the fields present in `file`. Malformed values throw ContractError.
void apply_config(const ConfigFile& file, TrainConfig& cfg);
void apply_config(const ConfigFile& file, AisConfig& cfg, const std::string& prefix = "ais.");

// The same key set, rendered with round-trip precision.
std::string config_to_text(const TrainConfig& cfg);

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);
std::vector<double> parse_double_list(const std::string& text, const std::string& what);
std::string format_double(double x);

BetaSchedule parse_beta_schedule(const std::string& name);
std::string_view beta_schedule_name(BetaSchedule s);
Monitor parse_monitor(const std::string& name);
std::string_view monitor_name(Monitor m);

}  // namespace grbm
