// Flat `key = value` configuration files. Lines are either blank, comments
// starting with '#', or a single dotted key with a typed value. Every
// diagnostic names the offending key and, when it comes from a file line, the
// line number. Unknown keys are rejected so typos cannot silently fall back to
// defaults.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rade/errors.hpp"
#include "rade/runtime.hpp"

namespace rade {

inline constexpr std::int64_t kConfigVersion = 1;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

class ConfigMap {
 public:
  static ConfigMap parse_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = detail::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", line_no);
      if (value.empty()) throw ConfigError("empty value for key '" + key + "'", line_no);
      if (map.entries_.contains(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
      map.entries_.emplace(key, Entry{value, line_no, false});
    }
    return map;
  }

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
  }

  bool contains(const std::string& key) const { return entries_.contains(key); }

  std::string require_string(const std::string& key) {
    Entry& e = require(key);
    return e.value;
  }

  std::optional<std::string> find_string(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.consumed = true;
    return it->second.value;
  }

  std::int64_t require_int(const std::string& key) { return parse_int(key, require(key)); }
  std::int64_t int_or(const std::string& key, std::int64_t fallback) {
    Entry* e = find(key);
    return e ? parse_int(key, *e) : fallback;
  }

  std::uint64_t uint_or(const std::string& key, std::uint64_t fallback) {
    Entry* e = find(key);
    return e ? parse_uint(key, *e) : fallback;
  }
  std::optional<std::uint64_t> find_uint(const std::string& key) {
    Entry* e = find(key);
    if (!e) return std::nullopt;
    return parse_uint(key, *e);
  }

  double require_double(const std::string& key) { return parse_double(key, require(key)); }
  double double_or(const std::string& key, double fallback) {
    Entry* e = find(key);
    return e ? parse_double(key, *e) : fallback;
  }

  std::vector<double> double_list_or(const std::string& key, std::vector<double> fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_list(key, *e)) out.push_back(parse_double_token(key, item, e->line));
    return out;
  }

  std::vector<std::uint64_t> uint_list_or(const std::string& key,
                                          std::vector<std::uint64_t> fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_list(key, *e)) out.push_back(parse_uint_token(key, item, e->line));
    return out;
  }

  std::vector<std::string> string_list_or(const std::string& key,
                                          std::vector<std::string> fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    return split_list(key, *e);
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  // Call after loading: any key never consumed is unknown.
  void reject_unknown() const {
    const Entry* worst = nullptr;
    std::string worst_key;
    for (const auto& [key, e] : entries_) {
      if (!e.consumed && (!worst || e.line < worst->line)) {
        worst = &e;
        worst_key = key;
      }
    }
    if (worst) throw ConfigError("unknown key '" + worst_key + "'", worst->line);
  }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool consumed = false;
  };

  Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
  }

  Entry& require(const std::string& key) {
    Entry* e = find(key);
    if (!e) throw ConfigError("missing required key '" + key + "'");
    return *e;
  }

  static std::int64_t parse_int(const std::string& key, const Entry& e) {
    std::int64_t out = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
      throw ConfigError("key '" + key + "': expected integer, got '" + e.value + "'", e.line);
    }
    return out;
  }

  static std::uint64_t parse_uint_token(const std::string& key, const std::string& tok, int line) {
    std::uint64_t out = 0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
      throw ConfigError("key '" + key + "': expected unsigned integer, got '" + tok + "'", line);
    }
    return out;
  }
  static std::uint64_t parse_uint(const std::string& key, const Entry& e) {
    return parse_uint_token(key, e.value, e.line);
  }

  static double parse_double_token(const std::string& key, const std::string& tok, int line) {
    double out = 0.0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
      throw ConfigError("key '" + key + "': expected number, got '" + tok + "'", line);
    }
    return out;
  }
  static double parse_double(const std::string& key, const Entry& e) {
    return parse_double_token(key, e.value, e.line);
  }

  std::vector<std::string> split_list(const std::string& key, const Entry& e) const {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(e.value);
    while (std::getline(in, item, ',')) {
      const std::string tok = detail::trim(item);
      if (tok.empty()) throw ConfigError("key '" + key + "': empty list item", e.line);
      out.push_back(tok);
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list", e.line);
    return out;
  }

  std::map<std::string, Entry> entries_;
};

// Episode settings shared by run and sweep configs. `require_method` /
// `require_arrival_scale` relax keys that a sweep supplies per cell.
inline EpisodeConfig load_episode_config(ConfigMap& cm, bool require_method,
                                         bool require_arrival_scale) {
  const std::int64_t version = cm.require_int("config_version");
  if (version != kConfigVersion) {
    throw ConfigError("config_version must be " + std::to_string(kConfigVersion) + ", got " +
                          std::to_string(version),
                      cm.line_of("config_version"));
  }

  EpisodeConfig cfg;
  if (require_method || cm.contains("method")) {
    const std::string name = cm.require_string("method");
    const auto method = parse_method(name);
    if (!method) {
      throw ConfigError(
          "key 'method': got '" + name + "', expected one of random, static, rade_star, rade, opt",
          cm.line_of("method"));
    }
    cfg.method = *method;
  }
  cfg.seed = cm.uint_or("seed", 0);

  const std::int64_t count = cm.int_or("domains.count", 3);
  if (count < 1) throw ConfigError("key 'domains.count': must be >= 1", cm.line_of("domains.count"));
  const double default_alpha[] = {1.0, 1.2, 0.8};
  cfg.domains.clear();
  for (std::int64_t d = 0; d < count; ++d) {
    const std::string prefix = "domains." + std::to_string(d) + ".";
    AnalyticDomainModel m;
    if (d < 3) {
      m.alpha = cm.double_or(prefix + "alpha", default_alpha[d]);
    } else {
      m.alpha = cm.require_double(prefix + "alpha");
    }
    m.tau_ref_ms = cm.double_or(prefix + "tau_ref_ms", 20.0);
    m.theta_ref_gbps = cm.double_or(prefix + "theta_ref_gbps", 2.0);
    cfg.domains.push_back(m);
  }

  cfg.traffic.total_steps = cm.require_int("traffic.total_steps");
  cfg.traffic.arrival_scale =
      require_arrival_scale ? cm.require_double("traffic.arrival_scale")
                            : cm.double_or("traffic.arrival_scale", 0.5);
  cfg.corruption.p_c = cm.double_or("corruption.p_c", 0.0);

  cfg.ogd.step_size = cm.double_or("ogd.step_size", 0.02);
  cfg.ogd.passes_per_step = static_cast<int>(cm.int_or("ogd.passes_per_step", 2));
  cfg.ogd.minibatch_size = static_cast<int>(cm.int_or("ogd.minibatch_size", 256));
  cfg.ogd.bn_momentum = cm.double_or("ogd.bn_momentum", 0.1);
  cfg.ogd.bn_epsilon = cm.double_or("ogd.bn_epsilon", 1e-5);

  cfg.buffer_capacity = static_cast<int>(cm.int_or("buffer.capacity", 2048));

  cfg.decomposer.grid_divisions = static_cast<int>(cm.int_or("decomposer.grid_divisions", 10));
  cfg.decomposer.refine_iters = static_cast<int>(cm.int_or("decomposer.refine_iters", 2));
  cfg.decomposer.prob_floor = cm.double_or("decomposer.prob_floor", 1e-9);

  cfg.static_warmup.epochs = static_cast<int>(cm.int_or("static.epochs", 1));
  cfg.static_warmup.arrival_scale = cm.double_or("static.arrival_scale", 0.25);
  cfg.static_warmup.warmup_seed = cm.find_uint("static.warmup_seed");

  cfg.model_shape.hidden_depth = static_cast<int>(cm.int_or("model.hidden_depth", 3));
  cfg.model_shape.hidden_width = static_cast<int>(cm.int_or("model.hidden_width", 8));
  cfg.model_shape.delay_ref_ms = cm.double_or("model.delay_ref_ms", 100.0);
  cfg.model_shape.throughput_ref_gbps = cm.double_or("model.throughput_ref_gbps", 1.0);
  cfg.model_shape.bn_epsilon = cfg.ogd.bn_epsilon;

  validate(cfg);
  return cfg;
}

struct RunConfig {
  EpisodeConfig episode;
  // Directory with pre-trained per-domain model files (domain_<d>.json).
  std::optional<std::string> static_params_dir;
};

inline RunConfig load_run_config(ConfigMap& cm) {
  RunConfig rc;
  rc.episode = load_episode_config(cm, /*require_method=*/true, /*require_arrival_scale=*/true);
  rc.static_params_dir = cm.find_string("static.params_dir");
  cm.reject_unknown();
  return rc;
}

struct SweepSpec {
  std::vector<MethodKind> methods;
  std::vector<double> arrival_rates;
  std::vector<double> corruption_rates;
  std::vector<std::uint64_t> seeds;
  std::uint64_t fig4_seed = 0;
  double fig4_arrival_rate = 0.5;
  double fig5_arrival_rate = 0.5;
  EpisodeConfig base;
};

inline SweepSpec load_sweep_spec(ConfigMap& cm) {
  SweepSpec spec;
  spec.base = load_episode_config(cm, /*require_method=*/false, /*require_arrival_scale=*/false);

  const std::vector<std::string> method_names = cm.string_list_or(
      "sweep.methods", {"random", "static", "rade_star", "rade", "opt"});
  for (const std::string& name : method_names) {
    const auto method = parse_method(name);
    if (!method) {
      throw ConfigError("key 'sweep.methods': unknown method '" + name + "'",
                        cm.line_of("sweep.methods"));
    }
    spec.methods.push_back(*method);
  }

  spec.arrival_rates = cm.double_list_or("sweep.arrival_rates", {0.3, 0.5, 0.7});
  for (double r : spec.arrival_rates) {
    if (!(r > 0.0)) {
      throw ConfigError("key 'sweep.arrival_rates': rates must be positive",
                        cm.line_of("sweep.arrival_rates"));
    }
  }
  spec.corruption_rates = cm.double_list_or("sweep.corruption_rates", {0.0, 0.1, 0.2, 0.3});
  for (double p : spec.corruption_rates) {
    if (p < 0.0 || p > 1.0) {
      throw ConfigError("key 'sweep.corruption_rates': rates must lie in [0, 1]",
                        cm.line_of("sweep.corruption_rates"));
    }
  }
  spec.seeds = cm.uint_list_or("sweep.seeds", {1, 2, 3, 4, 5});
  if (spec.seeds.empty()) throw ConfigError("key 'sweep.seeds': must be nonempty");

  spec.fig4_seed = cm.uint_or("sweep.fig4_seed", spec.seeds.front());
  spec.fig4_arrival_rate = cm.double_or("sweep.fig4_arrival_rate", 0.5);
  if (!(spec.fig4_arrival_rate > 0.0)) {
    throw ConfigError("key 'sweep.fig4_arrival_rate': must be positive",
                      cm.line_of("sweep.fig4_arrival_rate"));
  }
  spec.fig5_arrival_rate = cm.double_or("sweep.fig5_arrival_rate", 0.5);
  if (!(spec.fig5_arrival_rate > 0.0)) {
    throw ConfigError("key 'sweep.fig5_arrival_rate': must be positive",
                      cm.line_of("sweep.fig5_arrival_rate"));
  }

  cm.reject_unknown();
  return spec;
}

}  // namespace rade
