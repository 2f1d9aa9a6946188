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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "omtc/cli.hpp"

namespace omtc {
namespace {

namespace fs = std::filesystem;

const char* kSmall =
    "numerics.phonon_cutoff = 3\n"
    "numerics.t_max = 20\n"
    "numerics.leak_tolerance = 0\n"
    "filter.Gamma = 0.1\n";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "omtc_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string output_text(const CommandOutput& out, std::size_t i = 0) { return out.files.at(i).second; }

TEST(ParseConfig, EmptyGivesDefaults) {
  const auto c = parse_config("");
  const auto& m = c.setup.model;
  EXPECT_EQ(m.g_a, 2.4);
  EXPECT_EQ(m.g_M, 1.2);
  EXPECT_EQ(m.kappa, 0.2);
  EXPECT_EQ(m.gamma_a, 0.05);
  EXPECT_EQ(m.delta_ac, 0.0);
  EXPECT_EQ(m.gamma_M, 0.0);
  EXPECT_EQ(m.Mbar, 0.0);
  EXPECT_EQ(m.J, 0.0);
  EXPECT_EQ(c.filter.Gamma, 0.01);
  EXPECT_EQ(c.filter.n_points, 321);
  EXPECT_EQ(c.setup.cutoffs.phonon, 8);
  EXPECT_FALSE(c.sweep.has_value());
}

TEST(ParseConfig, OnlyJ) {
  const auto c = parse_config("# comment\nmodel.J = 1.0   # trailing\n\n");
  EXPECT_EQ(c.setup.model.J, 1.0);
  EXPECT_EQ(c.setup.model.g_a, 2.4);
}

TEST(ParseConfig, Rejections) {
  const auto rejects = [](const std::string& text, const std::string& fragment) {
    try {
      parse_config(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find(fragment), std::string::npos) << msg;
      EXPECT_EQ(msg.find('\n'), std::string::npos);
    }
  };
  rejects("model.gamma_a_coop = 0.1\nmodel.gamma_a = 0.05\n", "gamma_a_coop");
  rejects("numerics.dt = 0\n", "numerics.dt");
  rejects("model.g_x = 1\n", "model.g_x");
  rejects("model.J = abc\n", "model.J");
  rejects("model.J = 1\nmodel.J = 2\n", "duplicate");
  rejects("model.J\n", "line 1");
  rejects("numerics.method = euler\n", "numerics.method");
  rejects("filter.n_points = 2.5\n", "filter.n_points");
  rejects("filter.delta_min = 3\nfilter.delta_max = 2\n", "delta_min");
  rejects("sweep.parameter = J\n", "sweep");
  rejects("sweep.parameter = kappa\nsweep.values = 1\n", "sweep.parameter");
  rejects("sweep.parameter = gamma_a\nsweep.values = 0.1, -1\n", "sweep.values");
  rejects("geometry.r = 2\n", "geometry");
  rejects("numerics.excitation_cap = 2\n", "cap");
  rejects("model.kappa = inf\n", "model.kappa");
}

TEST(ParseConfig, GeometryDeterminesJ) {
  const auto c = parse_config("geometry.gamma_0 = 1\ngeometry.c_0 = 1\ngeometry.omega_eg = 2\ngeometry.r = 0.5\n");
  EXPECT_NEAR(c.setup.model.J, 0.75, 1e-15);
  EXPECT_THROW(parse_config("model.J = 1\ngeometry.gamma_0 = 1\ngeometry.c_0 = 1\ngeometry.omega_eg = 2\ngeometry.r = 0.5\n"),
               ConfigError);
}

TEST(ParseConfig, SweepAndEnums) {
  const auto c = parse_config(
      "sweep.parameter = J\nsweep.values = 0, 0.5,1.0\nnumerics.method = rk4\n"
      "numerics.initial_state = antisymmetric\nnumerics.excitation_cap = none\n");
  ASSERT_TRUE(c.sweep.has_value());
  EXPECT_EQ(c.sweep->parameter, SweepParameter::J);
  EXPECT_EQ(c.sweep->values, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(c.setup.numerics.method, Propagation::rk4);
  EXPECT_EQ(c.setup.initial, InitialCondition::antisymmetric);
  EXPECT_FALSE(c.setup.cutoffs.excitation_cap.has_value());
}

TEST(ParseConfig, EchoRoundTrips) {
  const auto c = parse_config(
      "model.J = 0.3\nmodel.gamma_M = 0.123456789012345\nmodel.Mbar = 0.1\nfilter.Gamma = 0.02\n"
      "sweep.parameter = gamma_a\nsweep.values = 0.05, 0.15\nnumerics.phonon_cutoff = 10\n");
  std::string text;
  for (const auto& l : config_echo(c)) text += l + "\n";
  const auto d = parse_config(text);
  EXPECT_EQ(config_echo(c), config_echo(d));
  EXPECT_EQ(d.setup.model.gamma_M, 0.123456789012345);
}

TEST(ParseConfig, ShippedPresetsParse) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(OMTC_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW(parse_config(read_file(entry.path().string())));
    ++n;
  }
  EXPECT_GE(n, 5);
  const auto g = parse_config(read_file(std::string(OMTC_CONFIG_DIR) + "/geometry.cfg"));
  EXPECT_NEAR(g.setup.model.J, 1.0, 1e-3);
}

TEST(RunSpectrum, CsvShapeAndFooter) {
  const auto cfg = parse_config(kSmall);
  const auto out = run_command(Command::spectrum, cfg, {});
  const auto text = output_text(out);
  EXPECT_EQ(out.files[0].first, "");
  EXPECT_EQ(text.rfind("# delta,intensity,integrated_counts\n", 0), 0u);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  double last = -1e9;
  while (std::getline(in, line) && line[0] != '#') {
    ++rows;
    const double d = std::stod(line.substr(0, line.find(',')));
    EXPECT_GT(d, last);
    last = d;
    if (rows == 1) EXPECT_EQ(d, -8.0);
  }
  EXPECT_EQ(rows, 321);
  EXPECT_EQ(last, 8.0);
  EXPECT_NE(text.find("# run.T = 20"), std::string::npos);
  EXPECT_NE(text.find("# run.residual_excitation"), std::string::npos);
  EXPECT_NE(text.find("# schema_version = 1"), std::string::npos);
  const auto back = config_from_footer(text);
  EXPECT_EQ(config_echo(back), config_echo(cfg));
}

TEST(RunSpectrum, ByteIdenticalAcrossRunsAndThreads) {
  const auto cfg = parse_config(kSmall);
  CliOptions one;
  CliOptions three;
  three.threads = 3;
  const auto a = output_text(run_command(Command::spectrum, cfg, one));
  const auto b = output_text(run_command(Command::spectrum, cfg, one));
  const auto c = output_text(run_command(Command::spectrum, cfg, three));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(RunSpectrum, DumpAndReload) {
  const auto cfg = parse_config(kSmall);
  CliOptions opt;
  opt.dump_correlation = scratch("grid.bin").string();
  opt.output = scratch("direct.csv").string();
  write_outputs(run_command(Command::spectrum, cfg, opt), std::cout);
  const auto grid = deserialize_grid(read_file(opt.dump_correlation));
  EXPECT_EQ(grid.size(), 1001);
  EXPECT_EQ(grid.parameter_hash, parameter_hash(cfg.setup));

  CliOptions reload;
  reload.load_correlation = opt.dump_correlation;
  const auto direct = read_file(opt.output);
  const auto again = output_text(run_command(Command::spectrum, cfg, reload));
  const auto body = [](const std::string& s) { return s.substr(0, s.find("\n#", 10)); };
  EXPECT_EQ(body(direct), body(again));

  const auto other = parse_config(std::string(kSmall) + "model.J = 0.2\n");
  EXPECT_THROW(run_command(Command::spectrum, other, reload), ConfigError);
}

TEST(GridDump, BinaryLayout) {
  CorrelationGrid g(3, 0.25);
  g.parameter_hash = 0x0102030405060708ULL;
  for (Index j = 0; j < 3; ++j)
    for (Index k = 0; k <= j; ++k) g.lower(j, k) = {1.0 * j, -1.0 * k};
  const auto bytes = serialize_grid(g);
  ASSERT_EQ(bytes.size(), 32u + 6 * 16);
  EXPECT_EQ(bytes.substr(0, 8), "OMTCCG01");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 0x08);
  double dt;
  std::memcpy(&dt, bytes.data() + 16, 8);
  EXPECT_EQ(dt, 0.25);
  const auto back = deserialize_grid(bytes);
  EXPECT_TRUE(std::equal(g.packed().begin(), g.packed().end(), back.packed().begin()));
  EXPECT_THROW(deserialize_grid(bytes.substr(0, 40)), ConfigError);
  EXPECT_THROW(deserialize_grid("nonsense"), ConfigError);
}

TEST(RunSweep, FilesAndSummary) {
  auto cfg = parse_config(std::string(kSmall) + "sweep.parameter = J\nsweep.values = 0, 0.5, 1.0\n");
  CliOptions opt;
  opt.output = scratch("sweep.csv").string();
  opt.svg = scratch("sweep.svg").string();
  const auto out = run_command(Command::sweep, cfg, opt);
  ASSERT_EQ(out.files.size(), 5u);
  EXPECT_EQ(fs::path(out.files[0].first).filename(), "sweep_J_0.csv");
  EXPECT_EQ(fs::path(out.files[1].first).filename(), "sweep_J_0.5.csv");
  EXPECT_EQ(fs::path(out.files[2].first).filename(), "sweep_J_1.csv");
  EXPECT_EQ(fs::path(out.files[3].first).filename(), "sweep_summary.csv");
  const auto& summary = out.files[3].second;
  EXPECT_EQ(summary.rfind("# J,peak_separation,", 0), 0u);
  std::istringstream in(summary);
  std::string line;
  std::getline(in, line);
  double prev = 0.0;
  for (int i = 0; i < 3; ++i) {
    std::getline(in, line);
    const auto c1 = line.find(',');
    const double sep = std::stod(line.substr(c1 + 1));
    EXPECT_GT(sep, prev);
    prev = sep;
  }
  const auto& svg = out.files[4].second;
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 3u);
  EXPECT_NE(svg.find("J = 0.5"), std::string::npos);
  EXPECT_THROW(run_command(Command::sweep, parse_config(kSmall), opt), ConfigError);
}

TEST(RunDressed, Csv) {
  const auto out = run_command(Command::dressed, parse_config("dressed.m_max = 2\n"), {});
  const auto text = output_text(out);
  EXPECT_EQ(text.rfind("# branch,m,position,weight\n+,0,2.74963975075,", 0), 0u);
  EXPECT_NE(text.find("\n-,2,"), std::string::npos);
  EXPECT_NE(text.find("# run.axis_sign = 1"), std::string::npos);
}

TEST(RunCorrelation, DiagonalCsv) {
  const auto out = run_command(Command::correlation, parse_config(kSmall), {});
  const auto text = output_text(out);
  EXPECT_EQ(text.rfind("# t,photon_number\n0,0\n", 0), 0u);
}

TEST(Svg, SingleSeriesViewBoxAndStyles) {
  Series s{"one", {-1.0, 0.0, 2.0}, {0.0, 1.0, 0.5}};
  const auto svg = render_svg({s});
  EXPECT_NE(svg.find("viewBox=\"0 0 800 500\""), std::string::npos);
  EXPECT_NE(svg.find("intensity"), std::string::npos);
  EXPECT_NE(svg.find("80.00,440.00"), std::string::npos);   // (-1, 0) at the lower-left corner
  EXPECT_NE(svg.find("780.00,"), std::string::npos);        // x = 2 at the right edge
  Series t = s, u = s;
  const auto three = render_svg({s, t, u});
  EXPECT_NE(three.find("stroke=\"#1f77b4\" stroke-dasharray=\"none\""), std::string::npos);
  EXPECT_NE(three.find("stroke=\"#d62728\" stroke-dasharray=\"6,3\""), std::string::npos);
  EXPECT_NE(three.find("stroke=\"#2ca02c\" stroke-dasharray=\"2,2\""), std::string::npos);
}

TEST(Svg, EmptySeriesCreatesNoFile) {
  const auto path = scratch("empty.svg");
  fs::remove(path);
  EXPECT_THROW(emit_plot({Series{"e", {}, {}}}, path.string()), ConfigError);
  EXPECT_THROW(emit_plot({}, path.string()), ConfigError);
  EXPECT_FALSE(fs::exists(path));
  EXPECT_THROW(emit_plot({Series{"x", {0, 1}, {0, 1}}}, "/nonexistent_dir/x.svg"), ConfigError);
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(OMTC_CLI_BINARY) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Binary, ExitCodes) {
  const auto good = scratch("good.cfg");
  write_file(good.string(), kSmall);
  const auto bad = scratch("bad.cfg");
  write_file(bad.string(), "numerics.dt = 0\n");
  const auto huge = scratch("huge.cfg");
  write_file(huge.string(), std::string(kSmall) + "numerics.memory_budget_mb = 1\n");
  EXPECT_EQ(run_binary("dressed --config " + good.string()), 0);
  EXPECT_EQ(run_binary("spectrum --config " + good.string() + " --output " + scratch("ok.csv").string()), 0);
  EXPECT_TRUE(fs::exists(scratch("ok.csv")));
  EXPECT_EQ(run_binary("spectrum --config " + bad.string()), 2);
  EXPECT_EQ(run_binary("spectrum --config " + huge.string()), 3);
  EXPECT_EQ(run_binary("spectrum --bogus"), 2);
  EXPECT_EQ(run_binary("spectrum --config /nonexistent.cfg"), 2);
  EXPECT_EQ(run_binary("spectrum --config " + good.string() + " --output /nonexistent_dir/x.csv"), 2);
}

}  // namespace
}  // namespace omtc
