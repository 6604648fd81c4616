#include "grbm/config.hpp"

#include <charconv>
#include <sstream>

#include "grbm/io.hpp"

namespace grbm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  const char* begin = t.data();
  if (!t.empty() && t.front() == '+') ++begin;
  double v = 0.0;
  const auto res = std::from_chars(begin, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ContractError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ContractError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ContractError(what + ": expected true/false, got '" + text + "'");
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
  if (out.empty()) throw ContractError(what + ": empty list");
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

BetaSchedule parse_beta_schedule(const std::string& name) {
  if (name == "linear") return BetaSchedule::linear;
  if (name == "geometric_tail") return BetaSchedule::geometric_tail;
  throw ContractError("unknown beta schedule: " + name);
}

std::string_view beta_schedule_name(BetaSchedule s) {
  return s == BetaSchedule::linear ? "linear" : "geometric_tail";
}

Monitor parse_monitor(const std::string& name) {
  if (name == "none") return Monitor::none;
  if (name == "exact") return Monitor::exact;
  if (name == "ais") return Monitor::ais;
  throw ContractError("unknown monitor: " + name);
}

std::string_view monitor_name(Monitor m) {
  switch (m) {
    case Monitor::none: return "none";
    case Monitor::exact: return "exact";
    case Monitor::ais: return "ais";
  }
  return "none";
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ContractError("config line " + std::to_string(line_no) + ": empty key");
    if (cfg.values_.count(key)) {
      throw ContractError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) { return parse(read_text_file(path)); }

std::optional<std::string> ConfigFile::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::optional<double> ConfigFile::get_double(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return parse_double(*s, key);
}

std::optional<long long> ConfigFile::get_int(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return parse_int(*s, key);
}

std::optional<bool> ConfigFile::get_bool(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return parse_bool(*s, key);
}

std::optional<std::vector<double>> ConfigFile::get_doubles(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return parse_double_list(*s, key);
}

std::vector<std::string> ConfigFile::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) out.push_back(key);
  }
  return out;
}

void apply_config(const ConfigFile& f, AisConfig& cfg, const std::string& prefix) {
  if (auto v = f.get_int(prefix + "num_chains")) cfg.num_chains = static_cast<int>(*v);
  if (auto v = f.get_int(prefix + "num_betas")) cfg.num_betas = static_cast<int>(*v);
  if (auto v = f.get_string(prefix + "schedule")) cfg.schedule = parse_beta_schedule(*v);
  if (auto v = f.get_int(prefix + "seed")) cfg.seed = static_cast<std::uint64_t>(*v);
}

void apply_config(const ConfigFile& f, TrainConfig& cfg) {
  if (auto v = f.get_string("method")) cfg.method = parse_method(*v);
  if (auto v = f.get_int("k_steps")) cfg.k_steps = static_cast<int>(*v);
  if (auto v = f.get_doubles("pt_temperatures")) cfg.pt_temperatures = *v;
  if (auto v = f.get_double("learning_rate_w")) cfg.learning_rate_w = *v;
  if (auto v = f.get_double("learning_rate_b")) cfg.learning_rate_b = *v;
  if (auto v = f.get_double("learning_rate_c")) cfg.learning_rate_c = *v;
  if (auto v = f.get_double("learning_rate_sigma")) cfg.learning_rate_sigma = *v;
  if (auto v = f.get_double("momentum.initial")) cfg.momentum.initial = *v;
  if (auto v = f.get_double("momentum.factor")) cfg.momentum.factor = *v;
  if (auto v = f.get_int("momentum.every_epochs")) cfg.momentum.every_epochs = static_cast<int>(*v);
  if (auto v = f.get_int("momentum.zero_final_epochs")) {
    cfg.momentum.zero_final_epochs = static_cast<int>(*v);
  }
  if (auto v = f.get_int("epochs")) cfg.epochs = static_cast<int>(*v);
  if (auto v = f.get_int("batch_size")) cfg.batch_size = static_cast<int>(*v);
  if (auto v = f.get_double("grad_norm_cap")) cfg.grad_norm_cap = *v;
  if (auto v = f.get_double("grad_norm_cap_data_fraction")) cfg.grad_norm_cap_data_fraction = *v;
  if (auto v = f.get_bool("learn_sigma")) cfg.learn_sigma = *v;
  if (auto v = f.get_double("tau_init")) cfg.tau_init = *v;
  if (auto v = f.get_double("sigma_init")) cfg.sigma_init = *v;
  if (auto v = f.get_int("num_chains")) cfg.num_chains = static_cast<int>(*v);
  if (auto v = f.get_int("seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto v = f.get_string("monitor")) cfg.monitor = parse_monitor(*v);
  if (auto v = f.get_int("monitor_every")) cfg.monitor_every = static_cast<int>(*v);
  if (auto v = f.get_int("enumeration_cap")) cfg.enumeration_cap = static_cast<int>(*v);
  apply_config(f, cfg.monitor_ais, "monitor_ais.");
}

std::string config_to_text(const TrainConfig& cfg) {
  std::ostringstream out;
  auto line = [&out](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
  line("method", std::string(method_name(cfg.method)));
  line("k_steps", std::to_string(cfg.k_steps));
  std::string temps;
  for (std::size_t i = 0; i < cfg.pt_temperatures.size(); ++i) {
    if (i) temps += ",";
    temps += format_double(cfg.pt_temperatures[i]);
  }
  line("pt_temperatures", temps);
  line("learning_rate_w", format_double(cfg.learning_rate_w));
  line("learning_rate_b", format_double(cfg.learning_rate_b));
  line("learning_rate_c", format_double(cfg.lr_c()));
  line("learning_rate_sigma", format_double(cfg.learning_rate_sigma));
  line("momentum.initial", format_double(cfg.momentum.initial));
  line("momentum.factor", format_double(cfg.momentum.factor));
  line("momentum.every_epochs", std::to_string(cfg.momentum.every_epochs));
  line("momentum.zero_final_epochs", std::to_string(cfg.momentum.zero_final_epochs));
  line("epochs", std::to_string(cfg.epochs));
  line("batch_size", std::to_string(cfg.batch_size));
  if (cfg.grad_norm_cap) line("grad_norm_cap", format_double(*cfg.grad_norm_cap));
  if (cfg.grad_norm_cap_data_fraction) {
    line("grad_norm_cap_data_fraction", format_double(*cfg.grad_norm_cap_data_fraction));
  }
  line("learn_sigma", cfg.learn_sigma ? "true" : "false");
  line("tau_init", format_double(cfg.tau_init));
  line("sigma_init", format_double(cfg.sigma_init));
  line("num_chains", std::to_string(cfg.num_chains));
  line("seed", std::to_string(cfg.seed));
  line("monitor", std::string(monitor_name(cfg.monitor)));
  line("monitor_every", std::to_string(cfg.monitor_every));
  line("enumeration_cap", std::to_string(cfg.enumeration_cap));
  line("monitor_ais.num_chains", std::to_string(cfg.monitor_ais.num_chains));
  line("monitor_ais.num_betas", std::to_string(cfg.monitor_ais.num_betas));
  line("monitor_ais.schedule", std::string(beta_schedule_name(cfg.monitor_ais.schedule)));
  line("monitor_ais.seed", std::to_string(cfg.monitor_ais.seed));
  return out.str();
}

}  // namespace grbm
