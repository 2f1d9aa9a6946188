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

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "omtc/model.hpp"
#include "omtc/types.hpp"

namespace omtc {

enum class Branch { plus, minus };

inline const char* to_string(Branch b) { return b == Branch::plus ? "+" : "-"; }

/// Sign relating dressed energies to the detuning axis of the filtered spectrum.
/// Fixed by comparing against the full numerics in the asymmetric
/// g_M = 0, J = 1 limit, where the brighter line sits at +epsilon.
inline constexpr double kAxisSign = 1.0;

/// Detuning of the bright atomic state from the bare cavity, J - delta_ac.
inline double effective_detuning(const ModelParams& p) { return p.J - p.delta_ac; }

/// tan 2 Theta = 2 sqrt(2) g_a / (delta + g_M^2), Theta in [0, pi/2].
inline double mixing_angle(const ModelParams& p) {
  const double y = 2.0 * std::numbers::sqrt2 * p.g_a;
  const double x = effective_detuning(p) + p.g_M * p.g_M;
  if (y == 0.0 && x == 0.0) {
    throw ConfigError("mixing angle undefined: g_a = 0 with a resonant bright state");
  }
  return 0.5 * std::atan2(y, x);
}

/// Single-excitation polaron energy for phonon index m.
inline double dressed_eigenvalue(const ModelParams& p, int m, Branch branch) {
  const double d = effective_detuning(p);
  const double x = d + p.g_M * p.g_M;
  const double root = 0.5 * std::sqrt(x * x + 8.0 * p.g_a * p.g_a);
  const double sign = branch == Branch::plus ? 1.0 : -1.0;
  return 0.5 * d + static_cast<double>(m) - 0.5 * p.g_M * p.g_M + sign * root;
}

/// Splitting between the two branches at equal m.
inline double rabi_separation(const ModelParams& p) {
  return dressed_eigenvalue(p, 0, Branch::plus) - dressed_eigenvalue(p, 0, Branch::minus);
}

/// <n| exp(beta (b+ - b)) |m> for real beta.
inline double displaced_fock_overlap(int n, int m, double beta) {
  if (n < 0 || m < 0) throw ConfigError("displaced_fock_overlap: negative Fock index");
  if (beta == 0.0) return n == m ? 1.0 : 0.0;
  const int lo = std::min(n, m);
  const int hi = std::max(n, m);
  const double x = beta * beta;
  // sqrt(lo!/hi!) |beta|^(hi-lo) e^{-x/2}, assembled in log space.
  const double log_mag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0)) +
                         (hi - lo) * std::log(std::abs(beta)) - 0.5 * x;
  const double lag = std::assoc_laguerre(static_cast<unsigned>(lo), static_cast<unsigned>(hi - lo), x);
  // beta^(n-m) for n >= m and (-beta)^(m-n) otherwise.
  const bool negative = (beta < 0.0) != (n < m) && (hi - lo) % 2 == 1;
  return (negative ? -1.0 : 1.0) * std::exp(log_mag) * lag;
}

/// kappa sin^2 Theta (plus) or kappa cos^2 Theta (minus) times |<0|D(beta)|m>|^2.
inline double transition_weight(const ModelParams& p, Branch branch, int m) {
  if (m < 0) throw ConfigError("transition_weight: negative phonon index");
  const double theta = mixing_angle(p);
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double fc = displaced_fock_overlap(0, m, p.beta());
  return p.kappa * (branch == Branch::plus ? s * s : c * c) * fc * fc;
}

struct DressedLevel {
  Branch branch = Branch::plus;
  int m = 0;
  double energy = 0.0;
  double theta = 0.0;
};

struct StickLine {
  double position = 0.0;
  double weight = 0.0;
  Branch branch = Branch::plus;
  int m = 0;
};

struct StickSpectrum {
  std::vector<StickLine> lines;

  double total_weight() const {
    double w = 0.0;
    for (const auto& l : lines) w += l.weight;
    return w;
  }
};

inline DressedLevel dressed_level(const ModelParams& p, Branch branch, int m) {
  return {branch, m, dressed_eigenvalue(p, m, branch), mixing_angle(p)};
}

/// One line per branch and m <= m_max, ordered (+, 0..m_max) then (-, 0..m_max).
inline StickSpectrum predicted_lines(const ModelParams& p, int m_max) {
  if (m_max < 0) throw ConfigError("predicted_lines: m_max must be >= 0");
  StickSpectrum out;
  out.lines.reserve(2 * static_cast<std::size_t>(m_max + 1));
  for (Branch b : {Branch::plus, Branch::minus}) {
    for (int m = 0; m <= m_max; ++m) {
      out.lines.push_back({kAxisSign * dressed_eigenvalue(p, m, b), transition_weight(p, b, m), b, m});
    }
  }
  return out;
}

/// Single-excitation, zero-phonon block of the Hamiltonian at g_M = 0 in the
/// basis {|e,g,0>, |g,e,0>, |g,g,1>}.
inline Eigen::Matrix3cd single_excitation_block(const ModelParams& p) {
  Eigen::Matrix3cd h;
  h << -p.delta_ac, p.J, p.g_a,
       p.J, -p.delta_ac, p.g_a,
       p.g_a, p.g_a, 0.0;
  return h;
}

/// U = exp(-pi/4 (s1+ s2 - s2+ s1)) on the same basis. U|e,g> is the bright
/// state (|eg> + |ge>)/sqrt 2 and U|g,e> the dark one (|ge> - |eg>)/sqrt 2.
inline Eigen::Matrix3cd bright_dark_rotation() {
  const double h = std::numbers::sqrt2 / 2.0;
  Eigen::Matrix3cd u;
  u << h, -h, 0.0,
       h, h, 0.0,
       0.0, 0.0, 1.0;
  return u;
}

/// Photon couplings of the bright and dark combinations.
inline std::array<double, 2> bright_dark_couplings(const ModelParams& p) {
  const Eigen::Matrix3cd u = bright_dark_rotation();
  const Eigen::Matrix3cd h = u.adjoint() * single_excitation_block(p) * u;
  return {std::abs(h(0, 2)), std::abs(h(1, 2))};
}

}  // namespace omtc
