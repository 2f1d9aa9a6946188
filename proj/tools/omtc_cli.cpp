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

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "omtc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Single-photon spectra of two dipole-coupled atoms in an optomechanical cavity"};
  app.require_subcommand(1, 1);
  omtc::CliOptions opt;
  std::string config_path;

  const auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "flat key = value configuration file");
    sub->add_option("--output", opt.output, "CSV output path (default: output.csv, else stdout)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    return sub;
  };
  auto* spectrum = add("spectrum", "filtered emission spectrum over the detuning sweep");
  spectrum->add_option("--svg", opt.svg, "SVG plot path");
  spectrum->add_option("--dump-correlation", opt.dump_correlation, "write the correlation grid");
  spectrum->add_option("--load-correlation", opt.load_correlation, "reuse a dumped correlation grid");
  auto* sweep = add("sweep", "spectra over sweep.values of sweep.parameter");
  sweep->add_option("--svg", opt.svg, "SVG plot path");
  auto* dressed = add("dressed", "closed-form dressed-state stick spectrum");
  auto* correlation = add("correlation", "two-time field correlation grid");
  correlation->add_option("--dump-correlation", opt.dump_correlation, "write the correlation grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  omtc::Command cmd = omtc::Command::spectrum;
  if (*sweep) cmd = omtc::Command::sweep;
  if (*dressed) cmd = omtc::Command::dressed;
  if (*correlation) cmd = omtc::Command::correlation;

  const auto start = std::chrono::steady_clock::now();
  try {
    const auto cfg = omtc::parse_config(config_path.empty() ? std::string() : omtc::read_file(config_path));
    const auto result = omtc::run_command(cmd, cfg, opt);
    omtc::write_outputs(result, std::cout);
  } catch (const omtc::ConfigError& e) {
    std::cerr << "omtc: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const omtc::NumericalError& e) {
    std::cerr << "omtc: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::bad_alloc&) {
    std::cerr << "omtc: numerical failure: out of memory; use a coarser numerics.dt or a shorter numerics.t_max\n";
    return 3;
  }
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  std::fprintf(stderr, "omtc: wall_clock_s = %.3f\n", wall.count());
  return 0;
}
