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

#include <cmath>
#include <string>
#include <vector>

#include "omtc/hilbert.hpp"

namespace omtc {

/// Physical parameters in units of the mechanical frequency (omega_M = 1).
/// Defaults are the strong-strong coupling working point.
struct ModelParams {
  double g_a = 2.4;           ///< atom-cavity coupling
  double g_M = 1.2;           ///< optomechanical coupling
  double delta_ac = 0.0;      ///< atom-cavity detuning omega_eg - omega_c
  double J = 0.0;             ///< dipole-dipole interaction strength
  double kappa = 0.2;         ///< cavity decay
  double gamma_a = 0.05;      ///< atomic spontaneous emission
  double gamma_a_coop = 0.0;  ///< cooperative atomic decay
  double gamma_M = 0.0;       ///< mechanical damping
  double Mbar = 0.0;          ///< mean thermal phonon number

  /// Polaron displacement g_M / omega_M.
  double beta() const { return g_M; }

  void validate() const {
    const auto finite = [](double v, const char* name) {
      if (!std::isfinite(v)) throw ConfigError(std::string("model.") + name + " must be finite");
    };
    const auto non_negative = [&](double v, const char* name) {
      finite(v, name);
      if (v < 0.0) {
        throw ConfigError(std::string("model.") + name + " must be >= 0 (got " +
                          std::to_string(v) + ")");
      }
    };
    non_negative(g_a, "g_a");
    non_negative(g_M, "g_M");
    non_negative(kappa, "kappa");
    non_negative(gamma_a, "gamma_a");
    non_negative(gamma_M, "gamma_M");
    non_negative(Mbar, "Mbar");
    finite(delta_ac, "delta_ac");
    finite(J, "J");
    finite(gamma_a_coop, "gamma_a_coop");
    // [[gamma_a, coop], [coop, gamma_a]] must be positive semidefinite.
    if (std::abs(gamma_a_coop) > gamma_a) {
      throw ConfigError("model.gamma_a_coop: |gamma_a_coop| = " +
                        std::to_string(std::abs(gamma_a_coop)) + " exceeds gamma_a = " +
                        std::to_string(gamma_a) + " (atomic dissipator not completely positive)");
    }
  }
};

/// Point dipoles at separation r; any consistent unit system.
struct DipoleGeometry {
  double gamma_0 = 1.0;
  double c_0 = 1.0;
  double omega_eg = 1.0;
  double r = 1.0;
};

/// J = (3/4) gamma_0 c_0^3 / (omega_eg^3 r^3).
inline double ddi_strength(const DipoleGeometry& geom) {
  for (double v : {geom.gamma_0, geom.c_0, geom.omega_eg, geom.r}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("dipole geometry entries must be finite and > 0");
    }
  }
  const double ratio = geom.c_0 / (geom.omega_eg * geom.r);
  return 0.75 * geom.gamma_0 * ratio * ratio * ratio;
}

/// Boltzmann occupancy of phonon level m0 at mean occupation Mbar.
inline double thermal_weight(double Mbar, int m0) {
  if (m0 < 0) return 0.0;
  if (Mbar == 0.0) return m0 == 0 ? 1.0 : 0.0;
  return std::pow(Mbar, m0) / std::pow(1.0 + Mbar, m0 + 1);
}

enum class InitialCondition {
  atom1,          ///< |e,g,0> (x) thermal phonons
  atom2,          ///< |g,e,0>
  symmetric,      ///< (|e,g> + |g,e>)/sqrt(2), bright
  antisymmetric,  ///< (|e,g> - |g,e>)/sqrt(2), dark
  photon,         ///< |g,g,1>
};

inline const char* to_string(InitialCondition c) {
  switch (c) {
    case InitialCondition::atom1: return "atom1";
    case InitialCondition::atom2: return "atom2";
    case InitialCondition::symmetric: return "symmetric";
    case InitialCondition::antisymmetric: return "antisymmetric";
    case InitialCondition::photon: return "photon";
  }
  return "?";
}

/// Minimum fraction of the thermal distribution the phonon cutoff must hold.
inline constexpr double kMinThermalCapture = 0.999;

inline DensityMatrix initial_state(const ModelParams& params, const HilbertSpace& space,
                                   InitialCondition initial = InitialCondition::atom1) {
  const int n_phonon = space.phonon_cutoff() + 1;
  std::vector<double> weights(static_cast<std::size_t>(n_phonon));
  double captured = 0.0;
  for (int m = 0; m < n_phonon; ++m) {
    weights[static_cast<std::size_t>(m)] = thermal_weight(params.Mbar, m);
    captured += weights[static_cast<std::size_t>(m)];
  }
  if (captured < kMinThermalCapture) {
    throw ConfigError("phonon cutoff " + std::to_string(space.phonon_cutoff()) +
                      " holds only " + std::to_string(captured) +
                      " of the thermal distribution at Mbar = " + std::to_string(params.Mbar) +
                      "; increase numerics.phonon_cutoff");
  }

  using L = Level;
  struct Component {
    L atom1;
    L atom2;
    int photon;
    double amplitude;
  };
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<Component> optical;
  switch (initial) {
    case InitialCondition::atom1: optical = {{L::excited, L::ground, 0, 1.0}}; break;
    case InitialCondition::atom2: optical = {{L::ground, L::excited, 0, 1.0}}; break;
    case InitialCondition::symmetric:
      optical = {{L::excited, L::ground, 0, h}, {L::ground, L::excited, 0, h}};
      break;
    case InitialCondition::antisymmetric:
      optical = {{L::excited, L::ground, 0, h}, {L::ground, L::excited, 0, -h}};
      break;
    case InitialCondition::photon: optical = {{L::ground, L::ground, 1, 1.0}}; break;
  }

  DensityMatrix rho = DensityMatrix::Zero(space.dim(), space.dim());
  for (int m = 0; m < n_phonon; ++m) {
    const double p = weights[static_cast<std::size_t>(m)] / captured;
    if (p == 0.0) continue;
    DenseVector psi = DenseVector::Zero(space.dim());
    for (const auto& c : optical) {
      const auto i = space.index({c.atom1, c.atom2, c.photon, m});
      if (!i) throw ConfigError("initial state lies outside the truncated space");
      psi(*i) = c.amplitude;
    }
    rho.noalias() += p * psi * psi.adjoint();
  }
  return rho;
}

/// H/hbar = -delta_ac (s1+ s1 + s2+ s2) + g_a (a+ s1 + a s1+ + a+ s2 + a s2+)
///          + J (s1+ s2 + s2+ s1) + b+ b - g_M a+ a (b+ + b)
inline OperatorMatrix build_hamiltonian(const ModelParams& params, const HilbertSpace& space) {
  // Products are formed on the uncapped space and projected afterwards, so
  // intermediate states above the cap (a s+ |g,g,1> passes |e,g,1>) are kept.
  const HilbertSpace full = space.uncapped();
  const auto ops = ladder_operators(full);
  const auto& a = ops.a;
  const auto& b = ops.b;
  const auto& s1 = ops.sigma1;
  const auto& s2 = ops.sigma2;
  const auto ad = a.adjoint();
  const auto bd = b.adjoint();
  const auto s1d = s1.adjoint();
  const auto s2d = s2.adjoint();

  OperatorMatrix h = -params.delta_ac * (s1d * s1 + s2d * s2);
  h = h + params.g_a * (ad * s1 + a * s1d + ad * s2 + a * s2d);
  h = h + params.J * (s1d * s2 + s2d * s1);
  h = h + bd * b;
  h = h - params.g_M * ((ad * a) * (bd + b));
  return project(OperatorMatrix(SparseMatrix(h.matrix().pruned())), full, space);
}

/// One dissipator term. With L_{O1,O2}[rho] = 2 O1 rho O2+ - O1+ O2 rho - rho O1+ O2,
/// the channel contributes (rate/2) L_{O1,O2}[rho]; local channels have O1 = O2.
struct DissipatorChannel {
  enum class Kind { local, cross };
  Kind kind = Kind::local;
  OperatorMatrix op1;
  OperatorMatrix op2;
  double rate = 0.0;
  std::string label;
};

struct DissipatorSpec {
  std::vector<DissipatorChannel> channels;
};

/// Rate of the a+a dephasing channel, 2 (2 beta)^2 gamma_M / ln(1 + 1/Mbar);
/// zero at Mbar = 0 by continuity.
inline double dephasing_rate(const ModelParams& params) {
  if (params.Mbar <= 0.0) return 0.0;
  const double beta = params.beta();
  return 2.0 * (2.0 * beta) * (2.0 * beta) * params.gamma_M / std::log1p(1.0 / params.Mbar);
}

inline DissipatorSpec build_dissipators(const ModelParams& params, const HilbertSpace& space) {
  params.validate();
  const HilbertSpace full = space.uncapped();
  const auto ops = ladder_operators(full);
  const auto n_photon = ops.a.adjoint() * ops.a;
  const double beta = params.beta();
  const auto local = [&](const OperatorMatrix& op, double rate, std::string label) {
    auto p = project(op, full, space);
    return DissipatorChannel{DissipatorChannel::Kind::local, p, p, rate, std::move(label)};
  };
  const auto cross = [&](const OperatorMatrix& op1, const OperatorMatrix& op2, double rate,
                         std::string label) {
    return DissipatorChannel{DissipatorChannel::Kind::cross, project(op1, full, space),
                             project(op2, full, space), rate, std::move(label)};
  };

  DissipatorSpec spec;
  spec.channels.push_back(local(ops.sigma1, params.gamma_a, "sigma1"));
  spec.channels.push_back(local(ops.sigma2, params.gamma_a, "sigma2"));
  spec.channels.push_back(cross(ops.sigma1, ops.sigma2, params.gamma_a_coop, "sigma1,sigma2"));
  spec.channels.push_back(cross(ops.sigma2, ops.sigma1, params.gamma_a_coop, "sigma2,sigma1"));
  spec.channels.push_back(local(ops.a, params.kappa, "a"));
  spec.channels.push_back(local(n_photon, dephasing_rate(params), "a+a"));
  spec.channels.push_back(local(ops.b - beta * n_photon, params.gamma_M * (params.Mbar + 1.0),
                                "b-beta*a+a"));
  spec.channels.push_back(
      local(ops.b.adjoint() - beta * n_photon, params.gamma_M * params.Mbar, "b+-beta*a+a"));
  return spec;
}

}  // namespace omtc
