/**
 * @file config.hpp
 * @brief Run configuration and its `key = value` text format.
 *
 * Blank lines and `#` comments are ignored. Every key is optional; missing
 * keys keep their defaults (the bouncing-ball case-study values). Grid axes
 * are written as `name lo hi n`. Numbers are written back in shortest
 * round-trip form, so serialising and re-reading a config is lossless.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "hybrid_zeno/ball_model.hpp"
#include "hybrid_zeno/errors.hpp"
#include "hybrid_zeno/format.hpp"
#include "hybrid_zeno/hybrid_sim.hpp"
#include "hybrid_zeno/pmp_shooting.hpp"
#include "hybrid_zeno/value_map.hpp"

namespace hybrid_zeno {

struct RunConfig {
  PhysParams params;
  IntegratorConfig integrator;
  SolverConfig solver;
  GridSpec costate_grid = default_costate_grid();
  GridSpec state_grid = default_state_grid();
  /// Fixed initial state of the co-state seed sweep.
  BallState costate_x0{0.1, 0.0};
  double sample_dt = 0.01;
  std::size_t checkpoint_rows = 10;
  std::string output_dir = "out";

  void validate() const {
    params.validate();
    integrator.validate();
    solver.validate();
    costate_grid.validate();
    state_grid.validate();
    if (!(sample_dt > 0)) throw ConfigError("sample_dt must be positive", 0, "sample_dt");
    if (checkpoint_rows < 1) throw ConfigError("checkpoint_rows must be at least 1", 0, "checkpoint_rows");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Binds each config key to a reader and a writer on RunConfig.
struct Field {
  std::function<void(RunConfig&, const std::string&, int)> read;
  std::function<std::string(const RunConfig&)> write;
};

inline double read_number(const std::string& key, const std::string& v, int line) {
  double out;
  if (!parse_double(v, out)) throw ConfigError("'" + v + "' is not a number", line, key);
  return out;
}

inline std::size_t read_count(const std::string& key, const std::string& v, int line) {
  const double d = read_number(key, v, line);
  if (!(d >= 0) || d != static_cast<double>(static_cast<std::size_t>(d))) {
    throw ConfigError("'" + v + "' is not a non-negative integer", line, key);
  }
  return static_cast<std::size_t>(d);
}

inline GridAxis read_axis(const std::string& key, const std::string& v, int line) {
  std::istringstream is(v);
  std::string name, lo, hi, n, extra;
  if (!(is >> name >> lo >> hi >> n) || (is >> extra)) {
    throw ConfigError("expected 'name lo hi n'", line, key);
  }
  return {name, read_number(key, lo, line), read_number(key, hi, line), read_count(key, n, line)};
}

inline std::string write_axis(const GridAxis& a) {
  return a.name + ' ' + fmt_double(a.lo) + ' ' + fmt_double(a.hi) + ' ' + std::to_string(a.n);
}

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    auto num = [&](const std::string& key, auto get) {
      f[key] = {[get, key](RunConfig& c, const std::string& v, int line) {
                  get(c) = read_number(key, v, line);
                },
                [get](RunConfig c) { return fmt_double(get(c)); }};
    };
    auto count = [&](const std::string& key, auto get) {
      f[key] = {[get, key](RunConfig& c, const std::string& v, int line) {
                  get(c) = read_count(key, v, line);
                },
                [get](RunConfig c) { return std::to_string(get(c)); }};
    };
    auto axis = [&](const std::string& key, auto get) {
      f[key] = {[get, key](RunConfig& c, const std::string& v, int line) {
                  get(c) = read_axis(key, v, line);
                },
                [get](RunConfig c) { return write_axis(get(c)); }};
    };
    num("m", [](RunConfig& c) -> double& { return c.params.m; });
    num("g", [](RunConfig& c) -> double& { return c.params.g; });
    num("c", [](RunConfig& c) -> double& { return c.params.c; });
    num("T_f", [](RunConfig& c) -> double& { return c.params.T_f; });
    num("x_f", [](RunConfig& c) -> double& { return c.params.x_f; });
    num("p_f", [](RunConfig& c) -> double& { return c.params.p_f; });
    num("rel_tol", [](RunConfig& c) -> double& { return c.integrator.rel_tol; });
    num("abs_tol", [](RunConfig& c) -> double& { return c.integrator.abs_tol; });
    num("event_tol", [](RunConfig& c) -> double& { return c.integrator.event_tol; });
    num("min_impact_gap", [](RunConfig& c) -> double& { return c.integrator.min_impact_gap; });
    count("max_events", [](RunConfig& c) -> std::size_t& { return c.integrator.max_events; });
    f["max_step"] = {[](RunConfig& c, const std::string& v, int line) {
                       if (v == "auto") {
                         c.integrator.max_step.reset();
                       } else {
                         c.integrator.max_step = read_number("max_step", v, line);
                       }
                     },
                     [](const RunConfig& c) {
                       return c.integrator.max_step ? fmt_double(*c.integrator.max_step)
                                                    : std::string("auto");
                     }};
    num("seed_lo", [](RunConfig& c) -> double& { return c.solver.seed_lo; });
    num("seed_hi", [](RunConfig& c) -> double& { return c.solver.seed_hi; });
    count("seeds_per_axis", [](RunConfig& c) -> std::size_t& { return c.solver.seeds_per_axis; });
    num("root_tol", [](RunConfig& c) -> double& { return c.solver.root_tol; });
    count("max_iters", [](RunConfig& c) -> std::size_t& { return c.solver.max_iters; });
    num("fd_step", [](RunConfig& c) -> double& { return c.solver.fd_step; });
    num("dedupe_radius", [](RunConfig& c) -> double& { return c.solver.dedupe_radius; });
    axis("costate_axis1", [](RunConfig& c) -> GridAxis& { return c.costate_grid.axis1; });
    axis("costate_axis2", [](RunConfig& c) -> GridAxis& { return c.costate_grid.axis2; });
    axis("state_axis1", [](RunConfig& c) -> GridAxis& { return c.state_grid.axis1; });
    axis("state_axis2", [](RunConfig& c) -> GridAxis& { return c.state_grid.axis2; });
    num("costate_x0", [](RunConfig& c) -> double& { return c.costate_x0.x; });
    num("costate_p0", [](RunConfig& c) -> double& { return c.costate_x0.p; });
    num("sample_dt", [](RunConfig& c) -> double& { return c.sample_dt; });
    count("checkpoint_rows", [](RunConfig& c) -> std::size_t& { return c.checkpoint_rows; });
    f["output_dir"] = {[](RunConfig& c, const std::string& v, int) { c.output_dir = v; },
                       [](const RunConfig& c) { return c.output_dir; }};
    return f;
  }();
  return table;
}

// Keys that do not influence computed results.
inline bool is_presentation_key(const std::string& key) {
  return key == "output_dir" || key == "checkpoint_rows";
}

}  // namespace detail

/// Parses the key-value format on top of `base`. Errors carry the line number and key.
inline RunConfig parse_config(std::istream& is, RunConfig base = {}) {
  const auto& table = detail::fields();
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'", line, key);
    if (auto prev = seen.find(key); prev != seen.end()) {
      throw ConfigError("duplicate key '" + key + "' (first set on line " +
                            std::to_string(prev->second) + ")",
                        line, key);
    }
    if (value.empty()) throw ConfigError("missing value", line, key);
    seen[key] = line;
    it->second.read(base, value, line);
  }
  return base;
}

inline RunConfig parse_config_string(const std::string& text, RunConfig base = {}) {
  std::istringstream is(text);
  return parse_config(is, std::move(base));
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  return parse_config(f);
}

/// Canonical text form; every key, one per line, sorted.
inline std::string serialize_config(const RunConfig& cfg, bool include_presentation = true) {
  std::ostringstream os;
  for (const auto& [key, field] : detail::fields()) {
    if (!include_presentation && detail::is_presentation_key(key)) continue;
    os << key << " = " << field.write(cfg) << '\n';
  }
  return os.str();
}

/// Fingerprint of everything that affects computed results (not output location or checkpoint cadence).
inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(serialize_config(cfg, false));
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hybrid_zeno
