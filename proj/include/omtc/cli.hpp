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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "omtc/config.hpp"
#include "omtc/dressed.hpp"
#include "omtc/io.hpp"
#include "omtc/simulation.hpp"
#include "omtc/spectrum.hpp"

namespace omtc {

enum class Command { spectrum, sweep, dressed, correlation };

/// Command-line overrides; empty strings fall back to the config's output.* keys.
struct CliOptions {
  std::string output;
  std::string svg;
  std::string dump_correlation;
  std::string load_correlation;
  int threads = 1;
};

/// Files and their contents written by one command.
struct CommandOutput {
  std::vector<std::pair<std::string, std::string>> files;  ///< (path, text); empty path = stdout
  std::vector<SpectrumResult> spectra;
};

/// Sweep values are reported with this summary row.
struct SweepRow {
  double value = 0.0;
  double separation = std::numeric_limits<double>::quiet_NaN();
  double lower_peak = std::numeric_limits<double>::quiet_NaN();
  double upper_peak = std::numeric_limits<double>::quiet_NaN();
  double max_intensity = 0.0;
};

/// Positions of the two tallest peaks, ascending; NaN when fewer than two.
inline std::pair<double, double> main_peaks(const std::vector<Peak>& peaks) {
  if (peaks.size() < 2) {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  std::vector<Peak> sorted = peaks;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Peak& a, const Peak& b) { return a.height > b.height; });
  return std::minmax(sorted[0].position, sorted[1].position);
}

namespace detail {

inline std::string value_suffix(const std::string& path, const std::string& tag) {
  const std::filesystem::path p(path);
  const auto stem = p.stem().string();
  const auto ext = p.has_extension() ? p.extension().string() : std::string(".csv");
  return (p.parent_path() / (stem + "_" + tag + ext)).string();
}

inline std::string peaks_text(const std::vector<Peak>& peaks) {
  std::string s;
  for (const auto& p : peaks) {
    s += (s.empty() ? "" : "; ") + format_csv(p.position) + ":" + format_csv(p.height) + ":" +
         format_csv(p.width);
  }
  return s.empty() ? "none" : s;
}

inline void describe(RunMetadata& meta, const SpectrumResult& r) {
  meta.add("T", r.T);
  meta.add("n_t", std::to_string(r.n_t));
  meta.add("grid_bytes", std::to_string(r.grid_bytes));
  meta.add("peaks", peaks_text(r.peaks));
}

inline void describe(RunMetadata& meta, const CorrelationRun& run) {
  meta.add("residual_excitation", run.info.evolution.residual_excitation);
  meta.add("early_stopped", run.info.evolution.early_stopped ? "true" : "false");
  meta.add("max_trace_drift", run.info.evolution.max_trace_drift);
  meta.add("backend_deviation", run.backend_deviation);
  meta.add("rk4_substeps", std::to_string(run.info.rk4_substeps));
}

}  // namespace detail

inline CommandOutput run_spectrum(const RunConfig& cfg, const CliOptions& opt) {
  SimulationSetup setup = cfg.setup;
  setup.numerics.threads = opt.threads;
  RunMetadata meta{config_echo(cfg), {}};
  CorrelationGrid grid;
  std::optional<CorrelationRun> run;
  const std::uint64_t hash = parameter_hash(setup);
  if (!opt.load_correlation.empty()) {
    grid = deserialize_grid(read_file(opt.load_correlation));
    if (grid.parameter_hash != hash || grid.dt() != setup.numerics.dt) {
      throw ConfigError("--load-correlation: '" + opt.load_correlation +
                        "' was produced with different model or numerics settings");
    }
    meta.add("grid_source", "dump");
  } else {
    run = simulate_correlation(setup);
    run->grid.parameter_hash = hash;
    meta.add("grid_source", "simulation");
  }
  const CorrelationGrid& g = run ? run->grid : grid;
  auto result = spectrum_from_grid(g, setup.model, cfg.filter, g.horizon(), opt.threads);
  if (run) result.residual_excitation = run->info.evolution.residual_excitation;
  detail::describe(meta, result);
  if (run) detail::describe(meta, *run);

  CommandOutput out;
  out.files.emplace_back(opt.output.empty() ? cfg.output.csv : opt.output, spectrum_csv(result, meta));
  const std::string dump = opt.dump_correlation.empty() ? cfg.output.correlation_dump : opt.dump_correlation;
  if (!dump.empty()) out.files.emplace_back(dump, serialize_grid(g));
  const std::string svg = opt.svg.empty() ? cfg.output.svg : opt.svg;
  if (!svg.empty()) out.files.emplace_back(svg, render_svg({to_series(result, "spectrum")}));
  out.spectra.push_back(std::move(result));
  return out;
}

/// Sweeps one model parameter. Every value is evaluated at a common time T,
/// the longest adaptive horizon over the sweep, so intensities compare.
inline CommandOutput run_sweep(const RunConfig& cfg, const CliOptions& opt) {
  if (!cfg.sweep) throw ConfigError("sweep: sweep.parameter and sweep.values are required");
  const std::string base = opt.output.empty() ? cfg.output.csv : opt.output;
  if (base.empty()) throw ConfigError("sweep: an output path is required (--output or output.csv)");
  const auto param = cfg.sweep->parameter;

  std::vector<SimulationSetup> setups;
  double horizon = 0.0;
  for (double v : cfg.sweep->values) {
    SimulationSetup s = cfg.setup;
    s.numerics.threads = opt.threads;
    sweep_target(s.model, param) = v;
    horizon = std::max(horizon, trajectory_summary(s).horizon);
    setups.push_back(s);
  }

  CommandOutput out;
  std::vector<SweepRow> rows;
  std::vector<Series> series;
  for (std::size_t i = 0; i < setups.size(); ++i) {
    auto& s = setups[i];
    s.numerics.t_max = horizon;
    s.numerics.leak_tolerance = 0.0;
    const double v = cfg.sweep->values[i];
    const auto run = simulate_correlation(s);
    auto result = spectrum_from_grid(run.grid, s.model, cfg.filter, run.grid.horizon(), opt.threads);
    result.residual_excitation = run.info.evolution.residual_excitation;

    RunMetadata meta{config_echo(cfg), {}};
    meta.add("sweep_value", std::string(to_string(param)) + " = " + format_exact(v));
    meta.add("horizon_mode", "common (longest adaptive horizon over the sweep)");
    meta.add("grid_reuse", "none (swept parameter enters the generator)");
    detail::describe(meta, result);
    detail::describe(meta, run);
    const std::string tag = std::string(to_string(param)) + "_" + format_exact(v);
    out.files.emplace_back(detail::value_suffix(base, tag), spectrum_csv(result, meta));

    SweepRow row;
    row.value = v;
    std::tie(row.lower_peak, row.upper_peak) = main_peaks(result.peaks);
    row.separation = row.upper_peak - row.lower_peak;
    for (const auto& p : result.points) row.max_intensity = std::max(row.max_intensity, p.intensity);
    rows.push_back(row);
    series.push_back(to_series(result, std::string(to_string(param)) + " = " + format_exact(v)));
    out.spectra.push_back(std::move(result));
  }

  std::string summary = std::string("# ") + to_string(param) +
                        ",peak_separation,lower_peak,upper_peak,max_intensity\n";
  for (const auto& r : rows) {
    summary += format_csv(r.value) + "," + format_csv(r.separation) + "," + format_csv(r.lower_peak) +
               "," + format_csv(r.upper_peak) + "," + format_csv(r.max_intensity) + "\n";
  }
  RunMetadata meta{config_echo(cfg), {}};
  meta.add("T", horizon);
  meta.add("horizon_mode", "common (longest adaptive horizon over the sweep)");
  out.files.emplace_back(detail::value_suffix(base, "summary"), summary + meta.footer());
  const std::string svg = opt.svg.empty() ? cfg.output.svg : opt.svg;
  if (!svg.empty()) out.files.emplace_back(svg, render_svg(series));
  return out;
}

inline CommandOutput run_dressed(const RunConfig& cfg, const CliOptions& opt) {
  const auto& m = cfg.setup.model;
  const auto lines = predicted_lines(m, cfg.dressed_m_max);
  std::string csv = "# branch,m,position,weight\n";
  for (const auto& l : lines.lines) {
    csv += std::string(to_string(l.branch)) + "," + std::to_string(l.m) + "," + format_csv(l.position) +
           "," + format_csv(l.weight) + "\n";
  }
  RunMetadata meta{config_echo(cfg), {}};
  meta.add("mixing_angle", mixing_angle(m));
  meta.add("rabi_separation", rabi_separation(m));
  meta.add("axis_sign", kAxisSign);
  meta.add("total_weight", lines.total_weight());
  CommandOutput out;
  out.files.emplace_back(opt.output.empty() ? cfg.output.csv : opt.output, csv + meta.footer());
  return out;
}

inline CommandOutput run_correlation(const RunConfig& cfg, const CliOptions& opt) {
  SimulationSetup setup = cfg.setup;
  setup.numerics.threads = opt.threads;
  auto run = simulate_correlation(setup);
  run.grid.parameter_hash = parameter_hash(setup);
  std::string csv = "# t,photon_number\n";
  for (Index j = 0; j < run.grid.size(); ++j) {
    csv += format_csv(static_cast<double>(j) * run.grid.dt()) + "," + format_csv(run.grid(j, j).real()) + "\n";
  }
  RunMetadata meta{config_echo(cfg), {}};
  meta.add("T", run.grid.horizon());
  meta.add("n_t", std::to_string(run.grid.size()));
  meta.add("grid_bytes", std::to_string(run.grid.memory_bytes()));
  detail::describe(meta, run);
  CommandOutput out;
  out.files.emplace_back(opt.output.empty() ? cfg.output.csv : opt.output, csv + meta.footer());
  const std::string dump = opt.dump_correlation.empty() ? cfg.output.correlation_dump : opt.dump_correlation;
  if (!dump.empty()) out.files.emplace_back(dump, serialize_grid(run.grid));
  return out;
}

inline CommandOutput run_command(Command cmd, const RunConfig& cfg, const CliOptions& opt) {
  if (opt.threads < 1) throw ConfigError("--threads must be >= 1");
  switch (cmd) {
    case Command::spectrum: return run_spectrum(cfg, opt);
    case Command::sweep: return run_sweep(cfg, opt);
    case Command::dressed: return run_dressed(cfg, opt);
    case Command::correlation: return run_correlation(cfg, opt);
  }
  throw ConfigError("unknown command");
}

/// Writes the command's files; an empty path goes to `out`.
inline void write_outputs(const CommandOutput& result, std::ostream& out) {
  for (const auto& [path, text] : result.files) {
    if (path.empty() || path == "-") out << text;
    else write_file(path, text);
  }
}

}  // namespace omtc
