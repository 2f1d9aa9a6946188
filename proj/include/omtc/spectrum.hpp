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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "omtc/dynamics.hpp"
#include "omtc/model.hpp"
#include "omtc/parallel.hpp"
#include "omtc/simulation.hpp"

namespace omtc {

/// Lorentzian detector filter and the detuning sweep Delta = omega - omega_c.
struct FilterParams {
  double Gamma = 0.01;
  double delta_min = -8.0;
  double delta_max = 8.0;
  int n_points = 321;

  void validate() const {
    if (!(Gamma > 0.0) || !std::isfinite(Gamma)) throw ConfigError("filter.Gamma must be > 0");
    if (!(delta_min < delta_max)) throw ConfigError("filter.delta_min must be < filter.delta_max");
    if (n_points < 2) throw ConfigError("filter.n_points must be >= 2");
  }

  std::vector<double> deltas() const {
    std::vector<double> d(static_cast<std::size_t>(n_points));
    const double step = (delta_max - delta_min) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) d[static_cast<std::size_t>(i)] = delta_min + i * step;
    d.back() = delta_max;
    return d;
  }
};

struct SpectrumPoint {
  double delta = 0.0;
  double intensity = 0.0;          ///< N(T; Delta, Gamma)
  double integrated_counts = 0.0;  ///< int_0^T N(t; Delta, Gamma) dt
};

struct Peak {
  double position = 0.0;
  double height = 0.0;
  double width = 0.0;  ///< full width at half maximum, interpolated
};

struct SpectrumResult {
  std::vector<SpectrumPoint> points;
  double T = 0.0;
  Index n_t = 0;
  double residual_excitation = 0.0;
  std::size_t grid_bytes = 0;
  ModelParams model;
  FilterParams filter;
  std::vector<Peak> peaks;
};

/// Counting rate at the evaluation time and its time integral.
struct FilteredRate {
  double at_T = 0.0;
  double integrated = 0.0;
};

/// Intensities below this are treated as a failed positivity check.
inline constexpr double kNegativeIntensityFloor = -1e-9;

namespace detail {

inline Index node_for_time(const CorrelationGrid& grid, double T) {
  if (grid.size() == 0) throw NumericalError("empty correlation grid");
  const double steps = T / grid.dt();
  const double node = std::round(steps);
  if (!(T >= 0.0) || std::abs(steps - node) > 1e-6) {
    throw NumericalError("evaluation time " + std::to_string(T) +
                         " is not a node of the correlation grid (dt = " +
                         std::to_string(grid.dt()) + ")");
  }
  if (node > static_cast<double>(grid.size() - 1)) {
    throw NumericalError("evaluation time " + std::to_string(T) + " exceeds the grid horizon " +
                         std::to_string(grid.horizon()));
  }
  return static_cast<Index>(node);
}

}  // namespace detail

/// N(t; Delta, Gamma) = kappa Gamma^2 int int exp(-(Gamma - i Delta)(t - t'))
///   exp(-(Gamma + i Delta)(t - t'')) <a+(t') a(t'')> dt' dt'' on [0, T]^2,
/// by trapezoidal quadrature on the grid, for a batch of detunings.
///
/// With r_j = sum_{k<j} w_k e^{-z(t_j - t_k)} C[j][k] and z = Gamma + i Delta the
/// double sum collapses to
///   N(t_n) / (kappa Gamma^2) = sum_{j<n} e^{-2 Gamma (t_n - t_j)} (w_j^2 C_jj + 2 w_j Re r_j)
///                              + (dt/2)^2 C_nn + dt Re r_n,
/// so every N(t_n), n <= T/dt, comes out of one pass over the lower triangle.
inline std::vector<FilteredRate> filtered_counting_rates(const CorrelationGrid& grid, double kappa,
                                                         double Gamma,
                                                         std::span<const double> deltas, double T,
                                                         int threads = 1) {
  if (!(Gamma > 0.0)) throw ConfigError("filter bandwidth Gamma must be > 0");
  const Index n_T = detail::node_for_time(grid, T);
  const Index n = n_T + 1;
  const double dt = grid.dt();
  const auto weight = [dt](Index k) { return k == 0 ? 0.5 * dt : dt; };

  // Exponent anchors keep Gamma * (t_k - t_anchor) <= kSegment, so nothing overflows.
  constexpr double kSegment = 300.0;
  const double t_seg = kSegment / Gamma;
  constexpr Index kBlock = 64;
  constexpr Index kChunk = 128;
  const Index n_blocks = (n + kBlock - 1) / kBlock;

  std::vector<FilteredRate> out(deltas.size());
  for (std::size_t c0 = 0; c0 < deltas.size(); c0 += kChunk) {
    const Index m = static_cast<Index>(std::min<std::size_t>(kChunk, deltas.size() - c0));
    std::vector<Complex> z(static_cast<std::size_t>(m));
    for (Index d = 0; d < m; ++d) z[static_cast<std::size_t>(d)] = {Gamma, deltas[c0 + static_cast<std::size_t>(d)]};

    const Index n_anchor = static_cast<Index>(std::floor(static_cast<double>(n - 1) * dt / t_seg)) + 1;
    std::vector<DenseMatrix> anchors(static_cast<std::size_t>(n_anchor));
    const auto anchor_of = [&](Index last_row) {
      return static_cast<Index>(std::floor(static_cast<double>(last_row) * dt / t_seg));
    };
    for (Index b = 0; b < n_blocks; ++b) {
      const Index s = anchor_of(std::min(n, (b + 1) * kBlock) - 1);
      auto& u = anchors[static_cast<std::size_t>(s)];
      if (u.size() != 0) continue;
      u.resize(n, m);
      const double t_a = static_cast<double>(s) * t_seg;
      for (Index k = 0; k < n; ++k) {
        const double tk = static_cast<double>(k) * dt - t_a;
        for (Index d = 0; d < m; ++d) u(k, d) = weight(k) * std::exp(z[static_cast<std::size_t>(d)] * tk);
      }
    }

    DenseMatrix r(n, m);
    parallel_blocks(n_blocks, threads, [&](Index b) {
      const Index j0 = b * kBlock;
      const Index j1 = std::min(n, j0 + kBlock);
      const Index s = anchor_of(j1 - 1);
      const double t_a = static_cast<double>(s) * t_seg;
      DenseMatrix rows = DenseMatrix::Zero(j1 - j0, j1);
      for (Index j = j0; j < j1; ++j) {
        const auto row = grid.row(j);
        for (Index k = 0; k < j; ++k) rows(j - j0, k) = row[static_cast<std::size_t>(k)];
      }
      const DenseMatrix prod = rows * anchors[static_cast<std::size_t>(s)].topRows(j1);
      for (Index j = j0; j < j1; ++j) {
        const double tj = static_cast<double>(j) * dt - t_a;
        for (Index d = 0; d < m; ++d) {
          r(j, d) = std::exp(-z[static_cast<std::size_t>(d)] * tj) * prod(j - j0, d);
        }
      }
    });

    const double decay = std::exp(-2.0 * Gamma * dt);
    const double prefactor = kappa * Gamma * Gamma;
    for (Index d = 0; d < m; ++d) {
      double q = 0.0;  // sum over j < current node
      double previous = 0.0;
      double integral = 0.0;
      double value = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double cjj = grid(j, j).real();
        const double rj = r(j, d).real();
        value = j == 0 ? 0.0 : prefactor * (q + 0.25 * dt * dt * cjj + dt * rj);
        if (j > 0) integral += 0.5 * dt * (previous + value);
        previous = value;
        const double wj = weight(j);
        q = decay * (q + wj * wj * cjj + 2.0 * wj * rj);
      }
      out[c0 + static_cast<std::size_t>(d)] = {value, integral};
    }
  }
  return out;
}

inline double filtered_counting_rate(const CorrelationGrid& grid, double kappa, double Delta,
                                     double Gamma, double T) {
  const double d[] = {Delta};
  return filtered_counting_rates(grid, kappa, Gamma, d, T).front().at_T;
}

/// Local maxima above min_height_fraction * global max, refined by a
/// three-point parabola, sorted by position.
inline std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y,
                                    double min_height_fraction) {
  if (x.size() != y.size()) throw ConfigError("find_peaks: x and y sizes differ");
  if (x.size() < 3) throw ConfigError("find_peaks: need at least 3 sweep points");
  if (!(min_height_fraction > 0.0 && min_height_fraction < 1.0)) {
    throw ConfigError("find_peaks: min_height_fraction must lie in (0, 1)");
  }
  const double top = *std::max_element(y.begin(), y.end());
  std::vector<Peak> peaks;
  if (!(top > 0.0)) return peaks;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1]) || y[i] < min_height_fraction * top) continue;
    const double step = x[i + 1] - x[i];
    const double curvature = y[i - 1] - 2.0 * y[i] + y[i + 1];
    double offset = curvature < 0.0 ? 0.5 * (y[i - 1] - y[i + 1]) / curvature : 0.0;
    offset = std::clamp(offset, -0.5, 0.5);
    const double height = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * offset;

    // Half-maximum crossings, stopping at the neighbouring minimum.
    const double half = 0.5 * height;
    const auto crossing = [&](int dir) {
      std::size_t k = i;
      while (true) {
        const std::size_t next = dir < 0 ? k - 1 : k + 1;
        if (y[next] <= half) {
          const double frac = (y[k] - half) / (y[k] - y[next]);
          return x[k] + (x[next] - x[k]) * frac;
        }
        if (y[next] > y[k] || next == 0 || next == n - 1) return x[next];
        k = next;
      }
    };
    peaks.push_back({x[i] + offset * step, height, crossing(+1) - crossing(-1)});
  }
  return peaks;
}

inline std::vector<Peak> find_peaks(const SpectrumResult& result, double min_height_fraction) {
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(result.points.size());
  y.reserve(result.points.size());
  for (const auto& p : result.points) {
    x.push_back(p.delta);
    y.push_back(p.intensity);
  }
  return find_peaks(x, y, min_height_fraction);
}

/// Default threshold for annotating peaks in a SpectrumResult.
inline constexpr double kDefaultPeakFraction = 0.005;

/// Evaluates the filter sweep on an existing grid at time T.
inline SpectrumResult spectrum_from_grid(const CorrelationGrid& grid, const ModelParams& model,
                                         const FilterParams& filter, double T, int threads = 1) {
  filter.validate();
  const auto deltas = filter.deltas();
  const auto rates = filtered_counting_rates(grid, model.kappa, filter.Gamma, deltas, T, threads);
  SpectrumResult result;
  result.T = T;
  result.n_t = grid.size();
  result.grid_bytes = grid.memory_bytes();
  result.model = model;
  result.filter = filter;
  result.points.reserve(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& r = rates[i];
    if (r.at_T < kNegativeIntensityFloor || r.integrated < kNegativeIntensityFloor) {
      throw NumericalError("negative filtered intensity " + std::to_string(r.at_T) +
                           " at Delta = " + std::to_string(deltas[i]));
    }
    result.points.push_back({deltas[i], std::max(0.0, r.at_T), std::max(0.0, r.integrated)});
  }
  result.peaks = find_peaks(result, kDefaultPeakFraction);
  return result;
}

/// Full pipeline: correlation grid over the adaptive horizon, then the sweep
/// evaluated at that horizon.
inline SpectrumResult stationary_spectrum(const SimulationSetup& setup, const FilterParams& filter) {
  filter.validate();
  const auto run = simulate_correlation(setup);
  auto result = spectrum_from_grid(run.grid, setup.model, filter, run.grid.horizon(),
                                   setup.numerics.threads);
  result.residual_excitation = run.info.evolution.residual_excitation;
  return result;
}

}  // namespace omtc
