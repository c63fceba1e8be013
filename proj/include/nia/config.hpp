#pragma once

// Run configuration: flat `key = value` files with dotted keys, overridable
// by `--set key=value`, plus the shipped figure presets.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nia/error.hpp"
#include "nia/evolve.hpp"
#include "nia/kernel.hpp"
#include "nia/model.hpp"
#include "nia/noise.hpp"

namespace nia {

enum class SystemKind { single, pair, spectator };

enum class Mode { simulate, ensemble, sweep, kernel, pulse_export, oracle_check, spectator_check };

struct RunConfig {
  SystemKind system = SystemKind::single;
  double T = 0.5e-3;
  double dt = 1e-6;
  double J0 = 4000.0;
  FrequencyConvention convention = FrequencyConvention::angular_direct;

  bool noise_enabled = false;
  double noise_amplitude = 4000.0;
  double noise_omega0 = 1.0;
  double noise_omega_cut = 5000.0;
  NoiseNormalization noise_normalization = NoiseNormalization::literal;

  std::uint64_t seed = 1;
  bool seed_set = false;
  std::size_t realizations = 1;
  std::string initial_state = "zero";

  double J12 = 215.0;
  double omega_spec = 0.0;
  std::string spectator_initial = "zero";

  std::size_t store_every = 1;
  bool renormalize = true;
  std::size_t kernel_points = 1001;
  NoiseSampling oracle_sampling = NoiseSampling::held;

  std::string sweep_parameter;
  std::vector<double> sweep_values;

  std::string out = ".";
  bool timestamp = true;
  unsigned jobs = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

struct KeyHandler {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, KeyHandler>& key_table() {
  static const std::map<std::string, KeyHandler> table = [] {
    std::map<std::string, KeyHandler> t;
    auto num = [&](const char* key, double RunConfig::*field) {
      t[key] = {[key, field](RunConfig& c, const std::string& v) { c.*field = parse_double(key, v); },
                [field](const RunConfig& c) { return fmt_double(c.*field); }};
    };
    auto count = [&](const char* key, std::size_t RunConfig::*field) {
      t[key] = {[key, field](RunConfig& c, const std::string& v) { c.*field = parse_uint(key, v); },
                [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto flag = [&](const char* key, bool RunConfig::*field) {
      t[key] = {[key, field](RunConfig& c, const std::string& v) { c.*field = parse_bool(key, v); },
                [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
    };
    auto text = [&](const char* key, std::string RunConfig::*field) {
      t[key] = {[field](RunConfig& c, const std::string& v) { c.*field = v; },
                [field](const RunConfig& c) { return c.*field; }};
    };

    t["system"] = {[](RunConfig& c, const std::string& v) {
                     if (v == "single") c.system = SystemKind::single;
                     else if (v == "pair") c.system = SystemKind::pair;
                     else if (v == "spectator") c.system = SystemKind::spectator;
                     else throw ConfigError("system: expected single|pair|spectator, got '" + v + "'");
                   },
                   [](const RunConfig& c) {
                     return std::string(c.system == SystemKind::single ? "single"
                                        : c.system == SystemKind::pair ? "pair"
                                                                       : "spectator");
                   }};
    num("T", &RunConfig::T);
    num("dt", &RunConfig::dt);
    num("J0", &RunConfig::J0);
    t["convention"] = {[](RunConfig& c, const std::string& v) {
                         if (v == "hertz") c.convention = FrequencyConvention::hertz;
                         else if (v == "angular-direct") c.convention = FrequencyConvention::angular_direct;
                         else throw ConfigError("convention: expected hertz|angular-direct, got '" + v + "'");
                       },
                       [](const RunConfig& c) { return to_string(c.convention); }};
    flag("noise.enabled", &RunConfig::noise_enabled);
    num("noise.amplitude", &RunConfig::noise_amplitude);
    num("noise.omega0", &RunConfig::noise_omega0);
    num("noise.omega_cut", &RunConfig::noise_omega_cut);
    t["noise.normalization"] = {[](RunConfig& c, const std::string& v) {
                                  if (v == "literal") c.noise_normalization = NoiseNormalization::literal;
                                  else if (v == "unit-rms") c.noise_normalization = NoiseNormalization::unit_rms;
                                  else throw ConfigError("noise.normalization: expected literal|unit-rms, got '" + v + "'");
                                },
                                [](const RunConfig& c) { return to_string(c.noise_normalization); }};
    t["seed"] = {[](RunConfig& c, const std::string& v) {
                   c.seed = parse_uint("seed", v);
                   c.seed_set = true;
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    count("realizations", &RunConfig::realizations);
    text("initial_state", &RunConfig::initial_state);
    num("J12", &RunConfig::J12);
    num("omega_spec", &RunConfig::omega_spec);
    text("spectator_initial", &RunConfig::spectator_initial);
    count("store_every", &RunConfig::store_every);
    flag("renormalize", &RunConfig::renormalize);
    count("kernel.points", &RunConfig::kernel_points);
    t["oracle.noise_sampling"] = {[](RunConfig& c, const std::string& v) {
                                    if (v == "held") c.oracle_sampling = NoiseSampling::held;
                                    else if (v == "exact") c.oracle_sampling = NoiseSampling::exact;
                                    else throw ConfigError("oracle.noise_sampling: expected held|exact, got '" + v + "'");
                                  },
                                  [](const RunConfig& c) {
                                    return std::string(c.oracle_sampling == NoiseSampling::held ? "held" : "exact");
                                  }};
    text("sweep.parameter", &RunConfig::sweep_parameter);
    t["sweep.values"] = {[](RunConfig& c, const std::string& v) {
                           c.sweep_values.clear();
                           std::stringstream ss(v);
                           std::string item;
                           while (std::getline(ss, item, ',')) {
                             item = trim(item);
                             if (!item.empty()) c.sweep_values.push_back(parse_double("sweep.values", item));
                           }
                         },
                         [](const RunConfig& c) {
                           std::string s;
                           for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
                             if (i) s += ",";
                             s += fmt_double(c.sweep_values[i]);
                           }
                           return s;
                         }};
    text("out", &RunConfig::out);
    flag("timestamp", &RunConfig::timestamp);
    t["jobs"] = {[](RunConfig& c, const std::string& v) { c.jobs = static_cast<unsigned>(parse_uint("jobs", v)); },
                 [](const RunConfig& c) { return std::to_string(c.jobs); }};
    return t;
  }();
  return table;
}

}  // namespace detail

// Keys that do not change results; excluded from the config hash.
inline bool is_output_key(const std::string& key) {
  return key == "out" || key == "timestamp" || key == "jobs";
}

inline void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  const auto& table = detail::key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second.set(c, detail::trim(value));
}

inline std::string get_key(const RunConfig& c, const std::string& key) {
  const auto& table = detail::key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second.get(c);
}

// Applies `key = value` lines; '#' starts a comment.
inline void apply_config_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_key(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

// "key=value"
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  set_key(c, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

// Canonical key/value dump, sorted by key.
inline std::map<std::string, std::string> to_key_values(const RunConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [key, h] : detail::key_table()) out[key] = h.get(c);
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Hash over result-affecting keys, minus `exclude`.
inline std::uint64_t config_hash(const RunConfig& c, const std::vector<std::string>& exclude = {}) {
  std::string canon;
  for (const auto& [k, v] : to_key_values(c)) {
    if (is_output_key(k)) continue;
    if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
    canon += k + "=" + v + "\n";
  }
  return fnv1a(canon);
}

inline std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Built-in presets, mirrored by presets/*.conf.
inline const std::map<std::string, std::string>& preset_texts() {
  static const std::map<std::string, std::string> presets = {
      {"fig3a",
       "# noise-free single-qubit sweep, T = 0.3 ms\n"
       "system = single\nJ0 = 4000\nT = 0.3e-3\ndt = 1e-6\ninitial_state = zero\n"},
      {"fig3b",
       "# noise-free single-qubit sweep, T = 0.5 ms\n"
       "system = single\nJ0 = 4000\nT = 0.5e-3\ndt = 1e-6\ninitial_state = zero\n"},
      {"fig3c",
       "# noise-free single-qubit sweep, T = 1.5 ms\n"
       "system = single\nJ0 = 4000\nT = 1.5e-3\ndt = 1e-6\ninitial_state = zero\n"},
      {"fig3d",
       "# noisy single-qubit sweep, T = 0.5 ms\n"
       "system = single\nJ0 = 4000\nT = 0.5e-3\ndt = 1e-6\ninitial_state = zero\n"
       "noise.enabled = true\nnoise.amplitude = 4000\nnoise.omega_cut = 5000\nnoise.omega0 = 1\n"
       "realizations = 100\nseed = 1\n"},
      {"fig4a",
       "# noise-free exchange sweep, T = 10 ms\n"
       "system = pair\nJ0 = 100\nT = 10e-3\ndt = 10e-6\ninitial_state = pair01\n"},
      {"fig4b",
       "# noisy exchange sweep, T = 10 ms\n"
       "system = pair\nJ0 = 100\nT = 10e-3\ndt = 10e-6\ninitial_state = pair01\n"
       "noise.enabled = true\nnoise.amplitude = 1000\nnoise.omega_cut = 25000\nnoise.omega0 = 1\n"
       "realizations = 100\nseed = 1\n"},
  };
  return presets;
}

inline RunConfig preset(const std::string& name) {
  const auto& p = preset_texts();
  const auto it = p.find(name);
  if (it == p.end()) throw ConfigError("unknown preset '" + name + "'");
  RunConfig c;
  apply_config_text(c, it->second);
  return c;
}

// Loads a preset by name, or a config file by path.
inline RunConfig load_config(const std::string& name_or_path) {
  if (preset_texts().count(name_or_path)) return preset(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot open config '" + name_or_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  apply_config_text(c, ss.str());
  return c;
}

// Schedule, noise and initial state derived from a config.

inline Schedule make_schedule(const RunConfig& c) {
  const SingleQubitSchedule single{c.J0, c.T, c.convention};
  switch (c.system) {
    case SystemKind::single:
      return single;
    case SystemKind::pair:
      return TwoQubitSchedule{c.J0, c.T, c.convention};
    case SystemKind::spectator:
      return SpectatorSchedule{single, c.J12, c.omega_spec};
  }
  return single;
}

inline NoiseSpec make_noise_spec(const RunConfig& c) {
  NoiseSpec n;
  n.amplitude = c.noise_amplitude;
  n.omega0 = c.noise_omega0;
  n.omega_cut = c.noise_omega_cut;
  n.normalization = c.noise_normalization;
  n.seed = c.seed;
  n.convention = c.convention;
  return n;
}

inline StateVector parse_initial_state(const std::string& name, int dim) {
  const double r = 1.0 / std::sqrt(2.0);
  StateVector v(dim);
  if (name == "zero") {
    v[0] = 1.0;
  } else if (name == "one") {
    v[dim == 2 ? 1 : 3] = 1.0;
  } else if (name == "plus") {
    if (dim != 2) throw ConfigError("initial_state 'plus' needs a single-qubit system");
    v = {r, r};
  } else if (name == "pair01") {
    if (dim != 4) throw ConfigError("initial_state 'pair01' needs a two-qubit system");
    v[1] = 1.0;
  } else if (name.rfind("amps:", 0) == 0) {
    std::vector<double> parts;
    std::stringstream ss(name.substr(5));
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(detail::parse_double("initial_state", detail::trim(item)));
    if (static_cast<int>(parts.size()) != 2 * dim) {
      throw ConfigError("initial_state amps: expected " + std::to_string(2 * dim) + " numbers (re,im pairs)");
    }
    for (int i = 0; i < dim; ++i) v[i] = Complex(parts[2 * i], parts[2 * i + 1]);
    if (std::abs(v.norm2() - 1.0) > 1e-10) throw ConfigError("initial_state amplitudes must be normalized");
  } else {
    throw ConfigError("initial_state: unknown preset '" + name + "'");
  }
  return v;
}

inline StateVector make_initial_state(const RunConfig& c) {
  if (c.system != SystemKind::spectator) return parse_initial_state(c.initial_state, c.system == SystemKind::single ? 2 : 4);
  const StateVector driven = parse_initial_state(c.initial_state, 2);
  const StateVector spec = parse_initial_state(c.spectator_initial, 2);
  StateVector v(4);
  for (int a = 0; a < 2; ++a)
    for (int s = 0; s < 2; ++s) v[2 * a + s] = driven[a] * spec[s];
  return v;
}

enum class Severity { error, warning };

struct Violation {
  Severity severity;
  std::string field;
  std::string message;
};

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> p = {"T", "J0", "noise.amplitude", "noise.omega_cut", "J12"};
  return p;
}

// Never throws. Errors block a run; warnings flag likely under-resolution.
inline std::vector<Violation> validate(const RunConfig& c, Mode mode = Mode::simulate) {
  std::vector<Violation> v;
  auto err = [&](const std::string& f, const std::string& m) { v.push_back({Severity::error, f, m}); };
  if (!(c.T > 0.0) || !std::isfinite(c.T)) err("T", "T must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) err("dt", "dt must be positive");
  else if (c.dt > c.T) err("dt", "dt must not exceed T");
  if (!(c.J0 > 0.0) || !std::isfinite(c.J0)) err("J0", "J0 must be positive");
  if (c.store_every < 1) err("store_every", "store_every must be >= 1");
  if (c.realizations < 1) err("realizations", "realizations must be >= 1");
  if (c.jobs < 1) err("jobs", "jobs must be >= 1");
  if (!(c.J12 >= 0.0)) err("J12", "J12 must be non-negative (SpectatorSchedule invariant)");
  if (c.noise_enabled) {
    if (!(c.noise_omega0 > 0.0)) err("noise.omega0", "noise.omega0 must be positive (NoiseSpec invariant)");
    if (!(c.noise_omega_cut >= c.noise_omega0)) {
      err("noise.omega_cut", "noise.omega_cut must be >= noise.omega0 (NoiseSpec invariant: w_cut >= w0 > 0)");
    }
    if (!(c.noise_amplitude >= 0.0) || !std::isfinite(c.noise_amplitude)) err("noise.amplitude", "noise.amplitude must be >= 0");
  }
  try {
    (void)make_initial_state(c);
  } catch (const Error& e) {
    err("initial_state", e.what());
  }
  if (mode == Mode::ensemble && !c.seed_set) err("seed", "ensemble mode requires an explicit seed");
  if (mode == Mode::sweep) {
    const auto& p = sweepable_parameters();
    if (std::find(p.begin(), p.end(), c.sweep_parameter) == p.end()) {
      err("sweep.parameter", "sweep.parameter must be one of T, J0, noise.amplitude, noise.omega_cut, J12");
    }
    if (c.sweep_values.empty()) err("sweep.values", "sweep.values must be a non-empty list");
    if (!c.seed_set && c.noise_enabled) err("seed", "sweep mode with noise requires an explicit seed");
  }
  if (mode == Mode::pulse_export && c.system != SystemKind::single) err("system", "pulse-export needs system = single");
  if (mode == Mode::kernel && c.system == SystemKind::spectator) err("system", "kernel mode needs system = single or pair");
  if (mode == Mode::kernel && c.kernel_points < kMinMemoryGridPoints) err("kernel.points", "kernel.points must be >= 500");
  if (mode == Mode::spectator_check && c.system == SystemKind::pair) err("system", "spectator-check needs system = single or spectator");

  const bool ok = std::none_of(v.begin(), v.end(), [](const Violation& x) { return x.severity == Severity::error; });
  if (ok) {
    const double c_rms = c.noise_enabled ? make_noise_spec(c).rms() : 0.0;
    const double hmax = (to_angular(c.convention, c.J0) + c_rms) * std::sqrt(2.0) +
                        (c.system == SystemKind::spectator ? 0.5 * kPi * c.J12 : 0.0);
    if (c.dt * hmax > 0.5) {
      v.push_back({Severity::warning, "dt",
                   "dt*max|H| = " + detail::fmt_double(c.dt * hmax) + " rad exceeds 0.5 (step may be under-resolved)"});
    }
    if (c.noise_enabled && c.dt > kPi / (5.0 * make_noise_spec(c).omega_cut_rad())) {
      v.push_back({Severity::warning, "dt", "dt resolves the noise cutoff with fewer than 10 points per period"});
    }
  }
  return v;
}

inline bool has_errors(const std::vector<Violation>& v) {
  return std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.severity == Severity::error; });
}

}  // namespace nia
