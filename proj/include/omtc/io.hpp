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
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "omtc/config.hpp"

namespace omtc {

/// FNV-1a over the canonical text of everything that determines a grid.
inline std::uint64_t parameter_hash(const SimulationSetup& s) {
  RunConfig c;
  c.setup = s;
  std::string text;
  for (const auto& line : config_echo(c)) {
    if (line.starts_with("model.") || line.starts_with("numerics.")) text += line + "\n";
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::array<char, 8> kGridMagic = {'O', 'M', 'T', 'C', 'C', 'G', '0', '1'};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

/// Header (magic, n_t, dt, parameter hash) then the lower triangle row by row
/// as (re, im) pairs; all fields little-endian 64-bit.
inline std::string serialize_grid(const CorrelationGrid& grid) {
  std::string out(kGridMagic.begin(), kGridMagic.end());
  out.reserve(32 + grid.memory_bytes());
  detail::put_u64(out, static_cast<std::uint64_t>(grid.size()));
  detail::put_u64(out, std::bit_cast<std::uint64_t>(grid.dt()));
  detail::put_u64(out, grid.parameter_hash);
  for (const Complex& c : grid.packed()) {
    detail::put_u64(out, std::bit_cast<std::uint64_t>(c.real()));
    detail::put_u64(out, std::bit_cast<std::uint64_t>(c.imag()));
  }
  return out;
}

inline CorrelationGrid deserialize_grid(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 32 || !std::equal(kGridMagic.begin(), kGridMagic.end(), bytes.begin())) {
    throw ConfigError("correlation dump: bad header");
  }
  const auto n_t = detail::get_u64(p + 8);
  const double dt = std::bit_cast<double>(detail::get_u64(p + 16));
  if (n_t == 0 || n_t > (1ULL << 24) || !(dt > 0.0)) throw ConfigError("correlation dump: bad header");
  CorrelationGrid grid(static_cast<Index>(n_t), dt);
  grid.parameter_hash = detail::get_u64(p + 24);
  auto packed = grid.packed();
  if (bytes.size() != 32 + 16 * packed.size()) {
    throw ConfigError("correlation dump: expected " + std::to_string(32 + 16 * packed.size()) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  for (std::size_t i = 0; i < packed.size(); ++i) {
    const auto* q = p + 32 + 16 * i;
    packed[i] = {std::bit_cast<double>(detail::get_u64(q)), std::bit_cast<double>(detail::get_u64(q + 8))};
  }
  return grid;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Footer lines of an output file: config echo plus run facts, all prefixed "# ".
struct RunMetadata {
  std::vector<std::string> config;
  std::vector<std::pair<std::string, std::string>> facts;

  void add(const std::string& key, const std::string& value) { facts.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_exact(value)); }

  std::string footer() const {
    std::string out = "# schema_version = " + std::to_string(kSchemaVersion) + "\n";
    for (const auto& line : config) out += "# config: " + line + "\n";
    for (const auto& [k, v] : facts) out += "# run." + k + " = " + v + "\n";
    return out;
  }
};

/// Reassembles the configuration echoed in an output file's footer.
inline RunConfig config_from_footer(const std::string& file_text) {
  std::string text;
  std::size_t pos = 0;
  const std::string tag = "# config: ";
  while (pos < file_text.size()) {
    auto end = file_text.find('\n', pos);
    if (end == std::string::npos) end = file_text.size();
    const auto line = std::string_view(file_text).substr(pos, end - pos);
    if (line.starts_with(tag)) text += std::string(line.substr(tag.size())) + "\n";
    pos = end + 1;
  }
  return parse_config(text);
}

inline std::string spectrum_csv(const SpectrumResult& r, const RunMetadata& meta) {
  std::string out = "# delta,intensity,integrated_counts\n";
  for (const auto& p : r.points) {
    out += format_csv(p.delta) + "," + format_csv(p.intensity) + "," +
           format_csv(p.integrated_counts) + "\n";
  }
  return out + meta.footer();
}

/// One plotted curve.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static SVG line plot; throws before touching the file when any series has
/// fewer than two points.
inline std::string render_svg(const std::vector<Series>& series) {
  if (series.empty()) throw ConfigError("plot: no series");
  double x0 = 0, x1 = 0, y1 = 0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() < 2 || s.x.size() != s.y.size()) {
      throw ConfigError("plot: series '" + s.label + "' needs at least two points");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = first ? s.x[i] : std::min(x0, s.x[i]);
      x1 = first ? s.x[i] : std::max(x1, s.x[i]);
      y1 = first ? s.y[i] : std::max(y1, s.y[i]);
      first = false;
    }
  }
  if (!(y1 > 0.0)) y1 = 1.0;
  if (x1 == x0) x1 = x0 + 1.0;
  constexpr double W = 800, H = 500, L = 80, R = 20, T = 20, B = 60;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  static constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                         "#9467bd", "#ff7f0e", "#17becf"};
  static constexpr std::array<const char*, 3> kDash = {"none", "6,3", "2,2"};

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
  out += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  out += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" +
         num(H - B) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(H - B + 18) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + format_csv(xv) + "</text>\n";
    const double yv = y1 * i / 4.0;
    out += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(yv) + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + format_csv(yv) + "</text>\n";
  }
  out += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 15) +
         "\" font-size=\"14\" text-anchor=\"middle\">&#916;/&#969;_M</text>\n";
  out += "<text x=\"20\" y=\"" + num((T + H - B) / 2) + "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         num((T + H - B) / 2) + ")\">intensity</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kColors[k % kColors.size()];
    const std::string dash = kDash[(k / kColors.size() + k) % kDash.size()];
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-dasharray=\"" + dash + "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += (i ? " " : "") + num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    out += "\"/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(k);
    out += "<line x1=\"" + num(W - R - 150) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(W - R - 120) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-dasharray=\"" + dash + "\"/>\n";
    out += "<text x=\"" + num(W - R - 114) + "\" y=\"" + num(ly + 4) + "\" font-size=\"12\">" + s.label +
           "</text>\n";
  }
  return out + "</svg>\n";
}

inline void emit_plot(const std::vector<Series>& series, const std::string& path) {
  const std::string svg = render_svg(series);
  write_file(path, svg);
}

inline Series to_series(const SpectrumResult& r, std::string label) {
  Series s{std::move(label), {}, {}};
  for (const auto& p : r.points) {
    s.x.push_back(p.delta);
    s.y.push_back(p.intensity);
  }
  return s;
}

}  // namespace omtc
