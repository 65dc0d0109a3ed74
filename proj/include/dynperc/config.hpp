#pragma once

// Experiment configuration: a flat key = value text format with # comments,
// comma-separated lists, and dotted keys for the sweep section. Parsing is
// strict: every key must belong to the chosen experiment, every value must
// parse completely, and anything else is a ConfigError naming the key.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/estimators.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/simulator.hpp"

namespace dynperc {

// Reference critical probabilities by dimension, for config validation
// only; no library routine branches on them. d = 3 is the accepted
// numerical value.
inline double pc_reference(int d) {
  switch (d) {
    case 1: return 1.0;
    case 2: return 0.5;
    case 3: return 0.2488;
    default: throw ConfigError("no p_c reference for d > 3");
  }
}

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (out.contains(key)) throw ConfigError("duplicate key: " + key);
    out[key] = value;
  }
  return out;
}

namespace detail {

struct ConfigReader {
  ConfigMap raw;
  std::set<std::string> consumed;

  bool has(const std::string& key) const { return raw.contains(key); }

  std::string str(const std::string& key, const std::string& fallback) {
    consumed.insert(key);
    auto it = raw.find(key);
    return it == raw.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) {
    consumed.insert(key);
    auto it = raw.find(key);
    if (it == raw.end()) throw ConfigError("missing required key: " + key);
    return it->second;
  }

  double num(const std::string& key, double fallback) {
    consumed.insert(key);
    auto it = raw.find(key);
    return it == raw.end() ? fallback : parse_double(key, it->second);
  }

  int64_t integer(const std::string& key, int64_t fallback) {
    consumed.insert(key);
    auto it = raw.find(key);
    return it == raw.end() ? fallback : parse_int(key, it->second);
  }

  uint64_t uinteger(const std::string& key, uint64_t fallback) {
    consumed.insert(key);
    auto it = raw.find(key);
    if (it == raw.end()) return fallback;
    try {
      size_t used = 0;
      const uint64_t v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not an unsigned integer: " + it->second);
    }
  }

  bool flag(const std::string& key, bool fallback) {
    consumed.insert(key);
    auto it = raw.find(key);
    if (it == raw.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(key + ": expected true/false");
  }

  std::vector<double> num_list(const std::string& key) {
    consumed.insert(key);
    auto it = raw.find(key);
    std::vector<double> out;
    if (it == raw.end()) return out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<int64_t> int_list(const std::string& key) {
    consumed.insert(key);
    auto it = raw.find(key);
    std::vector<int64_t> out;
    if (it == raw.end()) return out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_int(key, item));
    return out;
  }

  static double parse_double(const std::string& key, const std::string& s) {
    try {
      size_t used = 0;
      std::string t = s;
      const auto a = t.find_first_not_of(" \t");
      const auto b = t.find_last_not_of(" \t");
      if (a == std::string::npos) throw std::invalid_argument("");
      t = t.substr(a, b - a + 1);
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number: " + s);
    }
  }

  static int64_t parse_int(const std::string& key, const std::string& s) {
    try {
      size_t used = 0;
      std::string t = s;
      const auto a = t.find_first_not_of(" \t");
      const auto b = t.find_last_not_of(" \t");
      if (a == std::string::npos) throw std::invalid_argument("");
      t = t.substr(a, b - a + 1);
      const int64_t v = std::stoll(t, &used);
      if (used != t.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not an integer: " + s);
    }
  }
};

}  // namespace detail

struct ExperimentConfig {
  std::string experiment;
  ExperimentId id = ExperimentId::Msd;
  Geometry g;
  double p = std::nan("");
  double mu = std::nan("");
  uint64_t seed = 1;
  int64_t replicas = 1000;
  int workers = 0;  // 0 means hardware concurrency
  InitialCondition init = InitialCondition::stationary_uniform();

  std::vector<double> t_grid;  // raw model time (after unit conversion)
  double epsilon = 0.25;
  Vertex target{};
  bool target_is_antipode = true;
  double horizon = 0.0;  // 0 means the default 50 n^d / mu
  double c_obs = 1.0;
  int64_t count = 10000;
  int64_t max_blocks = 0;
  int64_t kappa = 10;
  double c = 0.05;
  double block_constant = 1.0;
  int64_t n_blocks = 40;
  std::string couple_variant = "t1";
  int64_t pairs = 1000;
  Vertex start_a{};
  Vertex start_b{};
  int64_t max_steps = 0;
  int64_t diam_fit_min = 5, diam_fit_max = 20;
  int64_t size_fit_min = 5, size_fit_max = 30;
  bool theta = false;

  std::map<std::string, std::vector<double>> sweep;  // keys among: p, mu, n
  int64_t max_grid = 64;
  std::string out_dir;  // empty means the CLI default

  ConfigMap echo;  // normalized key-value map, for the run manifest
  std::vector<std::string> warnings;

  ReplicaPlan plan(uint64_t grid_index = 0) const {
    return ReplicaPlan{seed, static_cast<uint64_t>(id), grid_index, workers};
  }
};

namespace detail {

inline const std::map<std::string, ExperimentId>& experiment_ids() {
  static const std::map<std::string, ExperimentId> ids = {
      {"msd", ExperimentId::Msd},       {"mix", ExperimentId::Mix},
      {"hit", ExperimentId::Hit},       {"excursions", ExperimentId::Excursions},
      {"sigma2", ExperimentId::Sigma2}, {"oracle", ExperimentId::Oracle},
      {"perc", ExperimentId::Perc},     {"couple", ExperimentId::Couple},
      {"freeze", ExperimentId::Freeze}, {"trace", ExperimentId::Trace}};
  return ids;
}

// keys each experiment accepts beyond the common set
inline const std::set<std::string>& experiment_keys(const std::string& name) {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"msd", {"t_grid", "t_unit"}},
      {"mix", {"t_grid", "t_unit", "epsilon"}},
      {"hit", {"target", "horizon"}},
      {"excursions", {"c_obs", "count", "max_blocks"}},
      {"sigma2", {"count", "max_blocks"}},
      {"oracle", {"epsilon"}},
      {"perc",
       {"diam_fit_min", "diam_fit_max", "size_fit_min", "size_fit_max", "theta"}},
      {"couple", {"variant", "pairs", "c_obs", "max_blocks", "start_a", "start_b", "max_steps"}},
      {"freeze", {"kappa", "c"}},
      {"trace", {"block_constant", "n_blocks"}}};
  return keys.at(name);
}

inline Vertex parse_vertex(const Geometry& g, const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::string item;
  Vertex v{};
  int i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= g.d) throw ConfigError(key + ": more coordinates than dimensions");
    v.c[static_cast<size_t>(i++)] = ConfigReader::parse_int(key, item);
  }
  if (i != g.d) throw ConfigError(key + ": expected " + std::to_string(g.d) + " coordinates");
  return wrap(g, v);
}

}  // namespace detail

inline ExperimentConfig parse_config(const ConfigMap& raw) {
  detail::ConfigReader r{raw, {}};
  ExperimentConfig cfg;
  cfg.echo = raw;

  cfg.experiment = r.require("experiment");
  const auto& ids = detail::experiment_ids();
  auto id_it = ids.find(cfg.experiment);
  if (id_it == ids.end()) throw ConfigError("unknown experiment: " + cfg.experiment);
  cfg.id = id_it->second;

  cfg.g.d = static_cast<int>(r.integer("d", 1));
  const std::string n_str = r.str("n", "inf");
  cfg.g.n = (n_str == "inf" || n_str == "0") ? 0
                                             : detail::ConfigReader::parse_int("n", n_str);
  try {
    cfg.g.validate();
  } catch (const InvalidParams& e) {
    throw ConfigError(e.what());
  }

  cfg.p = r.num("p", std::nan(""));
  cfg.mu = r.num("mu", std::nan(""));
  cfg.seed = r.uinteger("seed", 1);
  cfg.replicas = r.integer("replicas", 1000);
  cfg.workers = static_cast<int>(r.integer("workers", 0));
  cfg.out_dir = r.str("out", "");
  if (cfg.replicas <= 0) throw ConfigError("replicas must be positive");
  if (cfg.workers < 0) throw ConfigError("workers must be >= 0");

  // Mixing, hitting, and freeze are defined from a fixed-origin start in a
  // fresh stationary environment; everything else defaults to the fully
  // stationary law (walker uniform) where the lattice allows it.
  const bool origin_start =
      cfg.experiment == "mix" || cfg.experiment == "hit" || cfg.experiment == "freeze";
  const std::string init_kind =
      r.str("init", cfg.g.torus() && !origin_start ? "stationary_uniform" : "at");
  const std::string init_at = r.str("init_at", "");
  Vertex at{};
  if (!init_at.empty()) at = detail::parse_vertex(cfg.g, "init_at", init_at);
  if (init_kind == "stationary_uniform") {
    if (!cfg.g.torus()) throw ConfigError("init stationary_uniform needs a torus");
    cfg.init = InitialCondition::stationary_uniform();
  } else if (init_kind == "at") {
    cfg.init = InitialCondition::at(at);
  } else if (init_kind == "explicit_open" || init_kind == "explicit_closed") {
    cfg.init = InitialCondition::explicit_all(init_kind == "explicit_open", at);
  } else {
    throw ConfigError("unknown init: " + init_kind);
  }

  // sweep section
  for (const auto& [key, value] : raw) {
    if (!key.starts_with("sweep.")) continue;
    const std::string axis = key.substr(6);
    if (axis != "p" && axis != "mu" && axis != "n")
      throw ConfigError("sweep axis must be one of p, mu, n: " + key);
    const std::vector<double> values = r.num_list(key);
    if (!values.empty()) cfg.sweep[axis] = values;  // an empty list is a plain run
  }
  cfg.max_grid = r.integer("max_grid", 64);
  if (!cfg.sweep.empty()) {
    int64_t grid = 1;
    for (const auto& [axis, values] : cfg.sweep) grid *= static_cast<int64_t>(values.size());
    if (grid > cfg.max_grid)
      throw ConfigError("sweep grid has " + std::to_string(grid) + " points, cap is " +
                        std::to_string(cfg.max_grid));
  }

  const std::set<std::string>& allowed = detail::experiment_keys(cfg.experiment);
  auto uses = [&](const std::string& key) { return allowed.contains(key); };

  if (uses("t_grid")) {
    cfg.t_grid = r.num_list("t_grid");
    if (cfg.t_grid.empty())
      throw ConfigError(r.has("t_grid") ? "t_grid: empty list" : "missing required key: t_grid");
    const std::string unit = r.str("t_unit", "raw");
    if (unit == "inv_mu") {
      if (std::isnan(cfg.mu)) throw ConfigError("t_unit inv_mu needs mu");
      for (double& t : cfg.t_grid) t /= cfg.mu;
    } else if (unit != "raw") {
      throw ConfigError("t_unit must be raw or inv_mu");
    }
  }
  if (uses("epsilon")) cfg.epsilon = r.num("epsilon", 0.25);
  if (uses("target")) {
    const std::string t = r.str("target", "antipode");
    cfg.target_is_antipode = (t == "antipode");
    if (!cfg.target_is_antipode) cfg.target = detail::parse_vertex(cfg.g, "target", t);
  }
  if (uses("horizon")) cfg.horizon = r.num("horizon", 0.0);
  if (uses("c_obs")) cfg.c_obs = r.num("c_obs", 1.0);
  if (uses("count")) cfg.count = r.integer("count", 10000);
  if (uses("max_blocks")) cfg.max_blocks = r.integer("max_blocks", 0);
  if (uses("kappa")) cfg.kappa = r.integer("kappa", 10);
  if (uses("c")) cfg.c = r.num("c", 0.05);
  if (uses("block_constant")) cfg.block_constant = r.num("block_constant", 1.0);
  if (uses("n_blocks")) cfg.n_blocks = r.integer("n_blocks", 40);
  if (uses("variant")) {
    cfg.couple_variant = r.str("variant", "t1");
    if (cfg.couple_variant != "t1" && cfg.couple_variant != "lsrw")
      throw ConfigError("couple variant must be t1 or lsrw");
  }
  if (uses("pairs")) cfg.pairs = r.integer("pairs", 1000);
  if (uses("start_a") && r.has("start_a"))
    cfg.start_a = detail::parse_vertex(cfg.g, "start_a", r.require("start_a"));
  if (uses("start_b")) {
    if (r.has("start_b")) {
      cfg.start_b = detail::parse_vertex(cfg.g, "start_b", r.require("start_b"));
    } else if (cfg.g.torus()) {
      cfg.start_b = antipode(cfg.g, cfg.start_a);
    }
  }
  if (uses("max_steps")) cfg.max_steps = r.integer("max_steps", 0);
  if (uses("diam_fit_min")) {
    cfg.diam_fit_min = r.integer("diam_fit_min", 5);
    cfg.diam_fit_max = r.integer("diam_fit_max", 20);
    cfg.size_fit_min = r.integer("size_fit_min", 5);
    cfg.size_fit_max = r.integer("size_fit_max", 30);
  }
  if (uses("theta")) cfg.theta = r.flag("theta", false);

  // reject anything not consumed
  std::string extras;
  for (const auto& [key, value] : raw)
    if (!r.consumed.contains(key)) extras += (extras.empty() ? "" : ", ") + key;
  if (!extras.empty())
    throw ConfigError("unknown or unused keys for experiment " + cfg.experiment + ": " + extras);

  // per-experiment requirements
  const bool needs_p = cfg.experiment != "couple" || cfg.couple_variant == "t1";
  const bool needs_mu = needs_p && cfg.experiment != "perc";
  if (cfg.experiment == "couple" && cfg.couple_variant == "lsrw") {
    if (!cfg.g.torus()) throw ConfigError("couple lsrw needs a torus");
  }
  if (needs_p) {
    if (std::isnan(cfg.p)) throw ConfigError("missing required key: p");
    if (cfg.experiment == "perc") {
      if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw ConfigError("p outside [0, 1]");
    } else if (!(cfg.p > 0.0 && cfg.p < 1.0)) {
      throw ConfigError("p must lie strictly in (0, 1) for dynamics");
    }
  }
  if (needs_mu) {
    if (std::isnan(cfg.mu)) throw ConfigError("missing required key: mu");
    if (!(cfg.mu > 0.0)) throw ConfigError("mu must be positive");
    if (cfg.mu > 1.0)
      cfg.warnings.push_back("mu > 1.0: outside the regime the estimates are calibrated for");
  }

  const bool torus_only = cfg.experiment == "mix" || cfg.experiment == "hit" ||
                          cfg.experiment == "oracle" || cfg.experiment == "perc" ||
                          cfg.experiment == "freeze" ||
                          (cfg.experiment == "couple");
  if (torus_only && !cfg.g.torus())
    throw ConfigError(cfg.experiment + " needs a torus (set n)");
  if (cfg.experiment == "sigma2" && cfg.g.torus())
    throw ConfigError("sigma2 runs on the infinite lattice (n = inf)");

  if (cfg.experiment == "excursions" || cfg.experiment == "sigma2") {
    if (cfg.p >= pc_reference(cfg.g.d))
      throw ConfigError("regeneration sampling needs subcritical p: p_c(" +
                        std::to_string(cfg.g.d) + ") = " + std::to_string(pc_reference(cfg.g.d)));
  }
  if (cfg.experiment == "freeze") {
    if (cfg.g.d < 2) throw ConfigError("freeze needs d >= 2");
    if (cfg.p <= pc_reference(cfg.g.d))
      throw ConfigError("freeze needs supercritical p: p_c(" + std::to_string(cfg.g.d) +
                        ") = " + std::to_string(pc_reference(cfg.g.d)));
  }
  if (cfg.experiment == "excursions" && !cfg.g.torus())
    throw ConfigError("excursions needs a torus (use sigma2 on the infinite lattice)");

  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  return parse_config(parse_config_text(text));
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace dynperc
