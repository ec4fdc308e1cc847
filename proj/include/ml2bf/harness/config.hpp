#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/errors.hpp"

namespace ml2bf::harness {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Flat key = value text. '#' and ';' start comment lines; [section] headers
/// are accepted and ignored. Later assignments win.
inline std::map<std::string, std::string> parse_ini(std::istream &in, const std::string &origin = "config") {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

inline std::map<std::string, std::string> load_ini(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_ini(in, path);
}

/// Key/value store that records which keys were read, so leftovers can be
/// reported as unknown.
class Settings {
 public:
  Settings() = default;
  explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  void set(const std::string &key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string &key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string> &values() const { return values_; }

  std::optional<std::string> raw(const std::string &key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_string(const std::string &key, const std::string &fallback) const {
    return raw(key).value_or(fallback);
  }

  double get_double(const std::string &key, double fallback) const {
    const auto v = raw(key);
    return v ? parse_double(key, *v) : fallback;
  }

  int get_int(const std::string &key, int fallback) const {
    const auto v = raw(key);
    return v ? parse_int(key, *v) : fallback;
  }

  std::optional<std::uint64_t> get_u64(const std::string &key) const {
    const auto v = raw(key);
    if (!v) return std::nullopt;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
      throw ConfigError("key '" + key + "': expected an unsigned 64-bit integer, got '" + *v + "'");
    }
    return out;
  }

  bool get_bool(const std::string &key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
  }

  std::vector<double> get_doubles(const std::string &key, std::vector<double> fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto &item : split(*v, ',')) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<int> get_ints(const std::string &key, std::vector<int> fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<int> out;
    for (const auto &item : split(*v, ',')) out.push_back(parse_int(key, item));
    return out;
  }

  /// Keys present but never read.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto &[k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  void reject_unused() const {
    const auto left = unused();
    if (left.empty()) return;
    std::string msg = "unknown config key";
    msg += left.size() > 1 ? "s: " : ": ";
    for (std::size_t i = 0; i < left.size(); ++i) msg += (i ? ", " : "") + left[i];
    throw ConfigError(msg);
  }

  static double parse_double(const std::string &key, const std::string &v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
  }

  static int parse_int(const std::string &key, const std::string &v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

inline const std::vector<std::string> &experiment_names() {
  static const std::vector<std::string> names = {"table1", "figure_ortho", "figure_ar1", "figure_diag",
                                                 "anova",  "shibata",      "bf"};
  return names;
}

/// Settings shared by every experiment; the rest stay in `overrides`.
struct ExperimentConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  int replicates = 1000;
  std::vector<PriorMethod> methods;
  std::string output_dir = ".";
  int threads = 1;
  std::string dataset;
  Settings overrides;

  bool is_simulation() const { return experiment != "bf"; }

  std::uint64_t require_seed() const {
    if (!seed) throw ConfigError("experiment '" + experiment + "' needs a seed (--seed or seed = ...)");
    return *seed;
  }
};

inline std::vector<PriorMethod> parse_methods(const std::string &list) {
  std::vector<PriorMethod> out;
  for (const auto &token : split(list, ',')) {
    if (token.empty()) continue;
    out.push_back(PriorMethod::parse(token));
  }
  if (out.empty()) throw ConfigError("method list is empty");
  return out;
}

/// Builds the config from file values; command-line values are applied to
/// `values` beforehand so they win.
inline ExperimentConfig make_config(const std::string &experiment, Settings values) {
  if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end()) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.seed = values.get_u64("seed");
  cfg.replicates = values.get_int("replicates", 1000);
  cfg.output_dir = values.get_string("out", values.get_string("output_dir", "."));
  cfg.threads = values.get_int("threads", 1);
  cfg.dataset = values.get_string("dataset", "");
  if (const auto m = values.raw("methods")) cfg.methods = parse_methods(*m);
  if (cfg.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (cfg.experiment == "bf" && cfg.dataset.empty()) throw ConfigError("bf needs a dataset path");
  cfg.overrides = std::move(values);
  return cfg;
}

}  // namespace ml2bf::harness
