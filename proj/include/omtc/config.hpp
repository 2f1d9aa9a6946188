// Copyright 2026 The omtc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "omtc/dressed.hpp"
#include "omtc/simulation.hpp"
#include "omtc/spectrum.hpp"

namespace omtc {

inline constexpr int kSchemaVersion = 1;

enum class SweepParameter { J, delta_ac, gamma_M, gamma_a, Mbar };

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::J: return "J";
    case SweepParameter::delta_ac: return "delta_ac";
    case SweepParameter::gamma_M: return "gamma_M";
    case SweepParameter::gamma_a: return "gamma_a";
    case SweepParameter::Mbar: return "Mbar";
  }
  return "?";
}

inline double& sweep_target(ModelParams& m, SweepParameter p) {
  switch (p) {
    case SweepParameter::J: return m.J;
    case SweepParameter::delta_ac: return m.delta_ac;
    case SweepParameter::gamma_M: return m.gamma_M;
    case SweepParameter::gamma_a: return m.gamma_a;
    case SweepParameter::Mbar: return m.Mbar;
  }
  return m.J;
}

struct SweepSpec {
  SweepParameter parameter = SweepParameter::J;
  std::vector<double> values;
};

struct OutputSpec {
  std::string csv;
  std::string svg;
  std::string correlation_dump;
};

struct RunConfig {
  SimulationSetup setup;
  FilterParams filter;
  OutputSpec output;
  std::optional<DipoleGeometry> geometry;
  std::optional<SweepSpec> sweep;
  int dressed_m_max = 5;
};

/// Shortest text that reads back to the same double.
inline std::string format_exact(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// %.12g, the precision of every CSV value.
inline std::string format_csv(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a finite number, got '" + std::string(text) + "'");
  }
  return v;
}

inline long long parse_integer(std::string_view key, std::string_view text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

inline std::string parse_string(std::string_view text) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    text = text.substr(1, text.size() - 2);
  }
  return std::string(text);
}

}  // namespace detail

/// Flat `section.key = value` lines; `#` starts a comment. Unknown keys,
/// duplicates and malformed values are rejected with the offending key path.
inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  auto& model = cfg.setup.model;
  auto& num = cfg.setup.numerics;
  auto& cut = cfg.setup.cutoffs;
  DipoleGeometry geom;
  int geom_keys = 0;
  bool j_given = false;
  std::optional<SweepParameter> sweep_param;
  std::optional<std::vector<double>> sweep_values;

  using Setter = std::function<void(std::string_view key, std::string_view value)>;
  const auto real = [](double& field) -> Setter {
    return [&field](std::string_view k, std::string_view v) { field = detail::parse_real(k, v); };
  };
  const auto geometry = [&](double& field) -> Setter {
    return [&](std::string_view k, std::string_view v) {
      field = detail::parse_real(k, v);
      ++geom_keys;
    };
  };

  const std::map<std::string, Setter, std::less<>> table = {
      {"model.g_a", real(model.g_a)},
      {"model.g_M", real(model.g_M)},
      {"model.delta_ac", real(model.delta_ac)},
      {"model.J",
       [&](std::string_view k, std::string_view v) {
         model.J = detail::parse_real(k, v);
         j_given = true;
       }},
      {"model.kappa", real(model.kappa)},
      {"model.gamma_a", real(model.gamma_a)},
      {"model.gamma_a_coop", real(model.gamma_a_coop)},
      {"model.gamma_M", real(model.gamma_M)},
      {"model.Mbar", real(model.Mbar)},
      {"geometry.gamma_0", geometry(geom.gamma_0)},
      {"geometry.c_0", geometry(geom.c_0)},
      {"geometry.omega_eg", geometry(geom.omega_eg)},
      {"geometry.r", geometry(geom.r)},
      {"numerics.dt", real(num.dt)},
      {"numerics.t_max", real(num.t_max)},
      {"numerics.leak_tolerance", real(num.leak_tolerance)},
      {"numerics.method",
       [&](std::string_view k, std::string_view v) {
         const auto s = detail::parse_string(v);
         if (s == "rk4") num.method = Propagation::rk4;
         else if (s == "propagator") num.method = Propagation::propagator;
         else throw ConfigError(std::string(k) + ": expected rk4 or propagator, got '" + s + "'");
       }},
      {"numerics.memory_budget_mb",
       [&](std::string_view k, std::string_view v) {
         const auto mb = detail::parse_integer(k, v);
         if (mb <= 0) throw ConfigError(std::string(k) + ": must be > 0");
         num.memory_budget_bytes = static_cast<std::size_t>(mb) << 20;
       }},
      {"numerics.photon_cutoff",
       [&](std::string_view k, std::string_view v) {
         cut.photon = static_cast<int>(detail::parse_integer(k, v));
       }},
      {"numerics.phonon_cutoff",
       [&](std::string_view k, std::string_view v) {
         cut.phonon = static_cast<int>(detail::parse_integer(k, v));
       }},
      {"numerics.excitation_cap",
       [&](std::string_view k, std::string_view v) {
         const auto s = detail::parse_string(v);
         if (s == "none") cut.excitation_cap.reset();
         else cut.excitation_cap = static_cast<int>(detail::parse_integer(k, s));
       }},
      {"numerics.initial_state",
       [&](std::string_view k, std::string_view v) {
         const auto s = detail::parse_string(v);
         for (auto c : {InitialCondition::atom1, InitialCondition::atom2, InitialCondition::symmetric,
                        InitialCondition::antisymmetric, InitialCondition::photon}) {
           if (s == to_string(c)) {
             cfg.setup.initial = c;
             return;
           }
         }
         throw ConfigError(std::string(k) + ": unknown initial state '" + s + "'");
       }},
      {"filter.Gamma", real(cfg.filter.Gamma)},
      {"filter.delta_min", real(cfg.filter.delta_min)},
      {"filter.delta_max", real(cfg.filter.delta_max)},
      {"filter.n_points",
       [&](std::string_view k, std::string_view v) {
         cfg.filter.n_points = static_cast<int>(detail::parse_integer(k, v));
       }},
      {"output.csv", [&](std::string_view, std::string_view v) { cfg.output.csv = detail::parse_string(v); }},
      {"output.svg", [&](std::string_view, std::string_view v) { cfg.output.svg = detail::parse_string(v); }},
      {"output.correlation_dump",
       [&](std::string_view, std::string_view v) { cfg.output.correlation_dump = detail::parse_string(v); }},
      {"sweep.parameter",
       [&](std::string_view k, std::string_view v) {
         const auto s = detail::parse_string(v);
         for (auto p : {SweepParameter::J, SweepParameter::delta_ac, SweepParameter::gamma_M,
                        SweepParameter::gamma_a, SweepParameter::Mbar}) {
           if (s == to_string(p)) {
             sweep_param = p;
             return;
           }
         }
         throw ConfigError(std::string(k) + ": expected one of J, delta_ac, gamma_M, gamma_a, Mbar");
       }},
      {"sweep.values",
       [&](std::string_view k, std::string_view v) {
         std::vector<double> values;
         while (true) {
           const auto comma = v.find(',');
           values.push_back(detail::parse_real(k, detail::trim(v.substr(0, comma))));
           if (comma == std::string_view::npos) break;
           v = v.substr(comma + 1);
         }
         sweep_values = std::move(values);
       }},
      {"dressed.m_max",
       [&](std::string_view k, std::string_view v) {
         cfg.dressed_m_max = static_cast<int>(detail::parse_integer(k, v));
       }},
  };

  std::map<std::string, int, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (const auto [pos, fresh] = seen.emplace(std::string(key), line_no); !fresh) {
      throw ConfigError(where + std::string(key) + ": duplicate key (first set on line " +
                        std::to_string(pos->second) + ")");
    }
    if (value.empty()) throw ConfigError(where + std::string(key) + ": missing value");
    try {
      it->second(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }

  if (geom_keys > 0) {
    if (geom_keys != 4) throw ConfigError("geometry: all of gamma_0, c_0, omega_eg, r are required");
    if (j_given) throw ConfigError("model.J: conflicts with geometry.*, which determines J");
    cfg.geometry = geom;
    model.J = ddi_strength(geom);
  }
  if (sweep_param.has_value() != sweep_values.has_value()) {
    throw ConfigError("sweep: sweep.parameter and sweep.values must be given together");
  }
  if (sweep_param) {
    if (cfg.geometry && *sweep_param == SweepParameter::J) {
      throw ConfigError("sweep.parameter: J cannot be swept when geometry.* fixes it");
    }
    cfg.sweep = SweepSpec{*sweep_param, std::move(*sweep_values)};
  }
  if (cfg.dressed_m_max < 0) throw ConfigError("dressed.m_max: must be >= 0");

  model.validate();
  validate(num, model);
  cfg.filter.validate();
  build_space(cut.photon, cut.phonon, cut.excitation_cap);
  if (cfg.sweep) {
    for (double v : cfg.sweep->values) {
      ModelParams m = model;
      sweep_target(m, cfg.sweep->parameter) = v;
      try {
        m.validate();
        validate(num, m);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("sweep.values: ") + to_string(cfg.sweep->parameter) + " = " +
                          format_exact(v) + ": " + e.what());
      }
    }
  }
  return cfg;
}

/// The configuration as `key = value` lines, parseable by parse_config. The
/// worker count is not part of it: results do not depend on it.
inline std::vector<std::string> config_echo(const RunConfig& cfg) {
  std::vector<std::string> out;
  const auto put = [&](const std::string& key, const std::string& value) {
    out.push_back(key + " = " + value);
  };
  const auto& m = cfg.setup.model;
  if (cfg.geometry) {
    put("geometry.gamma_0", format_exact(cfg.geometry->gamma_0));
    put("geometry.c_0", format_exact(cfg.geometry->c_0));
    put("geometry.omega_eg", format_exact(cfg.geometry->omega_eg));
    put("geometry.r", format_exact(cfg.geometry->r));
  }
  put("model.g_a", format_exact(m.g_a));
  put("model.g_M", format_exact(m.g_M));
  put("model.delta_ac", format_exact(m.delta_ac));
  if (!cfg.geometry) put("model.J", format_exact(m.J));
  put("model.kappa", format_exact(m.kappa));
  put("model.gamma_a", format_exact(m.gamma_a));
  put("model.gamma_a_coop", format_exact(m.gamma_a_coop));
  put("model.gamma_M", format_exact(m.gamma_M));
  put("model.Mbar", format_exact(m.Mbar));
  const auto& n = cfg.setup.numerics;
  const auto& c = cfg.setup.cutoffs;
  put("numerics.dt", format_exact(n.dt));
  put("numerics.t_max", format_exact(n.t_max));
  put("numerics.method", to_string(n.method));
  put("numerics.leak_tolerance", format_exact(n.leak_tolerance));
  put("numerics.memory_budget_mb", std::to_string(n.memory_budget_bytes >> 20));
  put("numerics.photon_cutoff", std::to_string(c.photon));
  put("numerics.phonon_cutoff", std::to_string(c.phonon));
  put("numerics.excitation_cap", c.excitation_cap ? std::to_string(*c.excitation_cap) : "none");
  put("numerics.initial_state", to_string(cfg.setup.initial));
  put("filter.Gamma", format_exact(cfg.filter.Gamma));
  put("filter.delta_min", format_exact(cfg.filter.delta_min));
  put("filter.delta_max", format_exact(cfg.filter.delta_max));
  put("filter.n_points", std::to_string(cfg.filter.n_points));
  if (cfg.sweep) {
    put("sweep.parameter", to_string(cfg.sweep->parameter));
    std::string values;
    for (double v : cfg.sweep->values) values += (values.empty() ? "" : ", ") + format_exact(v);
    put("sweep.values", values);
  }
  put("dressed.m_max", std::to_string(cfg.dressed_m_max));
  return out;
}

}  // namespace omtc
