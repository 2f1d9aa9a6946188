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

#include <optional>

#include "omtc/dynamics.hpp"
#include "omtc/hilbert.hpp"
#include "omtc/model.hpp"

namespace omtc {

struct Cutoffs {
  int photon = 1;
  int phonon = 8;
  std::optional<int> excitation_cap = 1;
};

/// Everything that determines a correlation grid.
struct SimulationSetup {
  ModelParams model;
  Cutoffs cutoffs;
  InitialCondition initial = InitialCondition::atom1;
  EvolutionConfig numerics;
};

/// Assembled operators for one setup.
struct Simulation {
  HilbertSpace space;
  LadderOperators ops;
  OperatorMatrix hamiltonian;
  DissipatorSpec dissipators;
  Generator generator;
  DensityMatrix rho0;

  explicit Simulation(const SimulationSetup& setup)
      : space(checked_space(setup)),
        ops(ladder_operators(space)),
        hamiltonian(build_hamiltonian(setup.model, space)),
        dissipators(build_dissipators(setup.model, space)),
        generator(space, hamiltonian, dissipators),
        rho0(initial_state(setup.model, space, setup.initial)) {}

 private:
  static HilbertSpace checked_space(const SimulationSetup& setup) {
    setup.model.validate();
    validate(setup.numerics, setup.model);
    return build_space(setup.cutoffs.photon, setup.cutoffs.phonon, setup.cutoffs.excitation_cap);
  }
};

struct CorrelationRun {
  CorrelationGrid grid;
  CorrelationRunInfo info;
  double backend_deviation = 0.0;
};

/// Runs the backend cross-check, then the regression.
inline CorrelationRun simulate_correlation(const SimulationSetup& setup,
                                           RegressionSide side = RegressionSide::lower) {
  const Simulation sim(setup);
  CorrelationRun run;
  run.backend_deviation = backend_agreement(sim.rho0, sim.generator, sim.ops.a, setup.numerics);
  if (!(run.backend_deviation <= kBackendAgreement)) {
    throw NumericalError("rk4 and propagator backends disagree by " +
                         std::to_string(run.backend_deviation) + " after one step; reduce numerics.dt");
  }
  run.grid = two_time_correlation(sim.rho0, sim.generator, sim.ops.a, setup.numerics, side,
                                  &run.info);
  return run;
}

/// Trajectory-only pass: the time at which the early-stop criterion fires
/// (or t_max), without building the grid.
inline EvolutionSummary trajectory_summary(const SimulationSetup& setup) {
  const Simulation sim(setup);
  return evolve(sim.rho0, sim.generator, setup.numerics, [](Index, double, const DensityMatrix&) {});
}

}  // namespace omtc
