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
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "omtc/hilbert.hpp"
#include "omtc/model.hpp"
#include "omtc/parallel.hpp"

namespace omtc {

enum class Propagation {
  rk4,         ///< matrix-free fixed-step Runge-Kutta
  propagator,  ///< dense exp(L dt) per coherence sector
};

inline const char* to_string(Propagation p) {
  return p == Propagation::rk4 ? "rk4" : "propagator";
}

struct EvolutionConfig {
  double dt = 0.02;
  double t_max = 400.0;
  Propagation method = Propagation::propagator;
  /// Stop once <sum s+s + a+a> drops below this; 0 disables the early stop.
  double leak_tolerance = 1e-4;
  std::size_t memory_budget_bytes = std::size_t{2048} << 20;
  int threads = 1;
};

/// Largest frequency or rate of the model other than g_a and g_M.
inline double spectral_scale(const ModelParams& p) {
  return std::max({std::abs(p.delta_ac), std::abs(p.J), p.kappa, p.gamma_a,
                   p.gamma_M * (2.0 * p.Mbar + 1.0), dephasing_rate(p)});
}

inline void validate(const EvolutionConfig& cfg, const ModelParams& params) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("numerics.dt must be > 0");
  if (!(cfg.t_max >= cfg.dt) || !std::isfinite(cfg.t_max)) {
    throw ConfigError("numerics.t_max must be >= numerics.dt");
  }
  if (!(cfg.leak_tolerance >= 0.0)) throw ConfigError("numerics.leak_tolerance must be >= 0");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  const double limit =
      0.1 / std::max({1.0, params.g_a, params.g_M, spectral_scale(params)});
  if (cfg.dt > limit) {
    throw ConfigError("numerics.dt = " + std::to_string(cfg.dt) + " exceeds the stability guard " +
                      std::to_string(limit) + " for these couplings");
  }
}

/// Entries (r, c) of an operator with N(r) - N(c) == order, where N is the
/// optical excitation number. The generator maps each such sector into itself.
class CoherenceSector {
 public:
  CoherenceSector(const std::vector<int>& grading, int order) : order_(order) {
    const auto dim = static_cast<Index>(grading.size());
    for (Index r = 0; r < dim; ++r) {
      for (Index c = 0; c < dim; ++c) {
        if (grading[static_cast<std::size_t>(r)] - grading[static_cast<std::size_t>(c)] == order) {
          rows_.push_back(r);
          cols_.push_back(c);
        }
      }
    }
  }

  int order() const { return order_; }
  Index size() const { return static_cast<Index>(rows_.size()); }
  Index row(Index e) const { return rows_[static_cast<std::size_t>(e)]; }
  Index col(Index e) const { return cols_[static_cast<std::size_t>(e)]; }

  DenseVector gather(const DenseMatrix& x) const {
    DenseVector v(size());
    for (Index e = 0; e < size(); ++e) v(e) = x(row(e), col(e));
    return v;
  }

  void scatter(const DenseVector& v, DenseMatrix& x) const {
    for (Index e = 0; e < size(); ++e) x(row(e), col(e)) = v(e);
  }

 private:
  int order_;
  std::vector<Index> rows_;
  std::vector<Index> cols_;
};

/// Coherence orders carrying a nonzero entry of x.
inline std::vector<int> occupied_orders(const std::vector<int>& grading, const DenseMatrix& x) {
  std::vector<int> orders;
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      if (x(r, c) == Complex{}) continue;
      const int q = grading[static_cast<std::size_t>(r)] - grading[static_cast<std::size_t>(c)];
      if (std::find(orders.begin(), orders.end(), q) == orders.end()) orders.push_back(q);
    }
  }
  std::sort(orders.begin(), orders.end());
  return orders;
}

/// L[rho] = -i[H, rho] + sum_channels (rate/2)(2 O1 rho O2+ - O1+O2 rho - rho O1+O2)
class Generator {
 public:
  Generator(const HilbertSpace& space, const OperatorMatrix& hamiltonian,
            const DissipatorSpec& dissipators)
      : grading_(space.excitation_grading()), h_(hamiltonian.matrix()) {
    if (hamiltonian.dim() != space.dim()) throw NumericalError("Hamiltonian dimension mismatch");
    const Index dim = space.dim();
    SparseMatrix k(dim, dim);
    for (const auto& ch : dissipators.channels) {
      if (ch.op1.dim() != dim || ch.op2.dim() != dim) {
        throw NumericalError("dissipator '" + ch.label + "' dimension mismatch");
      }
      if (!std::isfinite(ch.rate)) throw NumericalError("dissipator '" + ch.label + "' rate");
      if (ch.kind == DissipatorChannel::Kind::local && ch.rate < 0.0) {
        throw ConfigError("dissipator '" + ch.label + "' has a negative rate");
      }
      if (ch.rate == 0.0) continue;
      jumps_.push_back({ch.rate, ch.op1.matrix(), SparseMatrix(ch.op2.matrix().adjoint()),
                        SparseMatrix(ch.op1.matrix().adjoint()), ch.op2.matrix()});
      k += Complex(0.5 * ch.rate, 0.0) * SparseMatrix(ch.op1.matrix().adjoint() * ch.op2.matrix());
    }
    k_ = k.pruned();
    k_adj_ = SparseMatrix(k_.adjoint());
  }

  Index dim() const { return h_.rows(); }
  const std::vector<int>& grading() const { return grading_; }

  DenseMatrix apply(const DenseMatrix& rho) const {
    check(rho);
    const Complex i{0.0, 1.0};
    DenseMatrix out = -i * (h_ * rho) + i * (rho * h_);
    out.noalias() -= k_ * rho;
    out.noalias() -= rho * k_;
    for (const auto& j : jumps_) {
      const DenseMatrix t = j.op1 * rho;
      out.noalias() += Complex(j.rate, 0.0) * (t * j.op2_adj);
    }
    return out;
  }

  /// Hilbert-Schmidt adjoint: Tr(A+ L[rho]) = Tr(L+[A]+ rho).
  DenseMatrix apply_adjoint(const DenseMatrix& a) const {
    check(a);
    const Complex i{0.0, 1.0};
    DenseMatrix out = i * (h_ * a) - i * (a * h_);
    out.noalias() -= k_adj_ * a;
    out.noalias() -= a * k_adj_;
    for (const auto& j : jumps_) {
      const DenseMatrix t = j.op1_adj * a;
      out.noalias() += Complex(j.rate, 0.0) * (t * j.op2);
    }
    return out;
  }

  /// Cheap upper estimate of the generator's spectral radius.
  double norm_bound() const {
    const auto inf_norm = [](const SparseMatrix& m) {
      double best = 0.0;
      for (Index r = 0; r < m.outerSize(); ++r) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
      }
      return best;
    };
    double bound = 2.0 * inf_norm(h_) + 2.0 * inf_norm(k_);
    for (const auto& j : jumps_) bound += std::abs(j.rate) * inf_norm(j.op1) * inf_norm(j.op2_adj);
    return bound;
  }

  /// exp(L dt) on one coherence sector; computed once per (order, dt) and cached.
  const DenseMatrix& sector_propagator(int order, double dt) const {
    std::lock_guard lock(cache_->mutex);
    for (const auto& e : cache_->entries) {
      if (e.order == order && e.dt == dt) return *e.propagator;
    }
    const CoherenceSector sector(grading_, order);
    auto p = std::make_unique<DenseMatrix>((sector_matrix(sector) * Complex(dt, 0.0)).exp());
    cache_->entries.push_back({order, dt, std::move(p)});
    return *cache_->entries.back().propagator;
  }

  /// Dense matrix of L restricted to a coherence sector, in the sector's entry order.
  DenseMatrix sector_matrix(const CoherenceSector& sector) const {
    const Index n = sector.size();
    DenseMatrix out(n, n);
    DenseMatrix unit = DenseMatrix::Zero(dim(), dim());
    for (Index e = 0; e < n; ++e) {
      unit(sector.row(e), sector.col(e)) = 1.0;
      out.col(e) = sector.gather(apply(unit));
      unit(sector.row(e), sector.col(e)) = 0.0;
    }
    return out;
  }

 private:
  struct Jump {
    double rate;
    SparseMatrix op1;
    SparseMatrix op2_adj;
    SparseMatrix op1_adj;
    SparseMatrix op2;
  };

  struct PropagatorCache {
    struct Entry {
      int order;
      double dt;
      std::unique_ptr<DenseMatrix> propagator;
    };
    std::mutex mutex;
    std::vector<Entry> entries;
  };

  void check(const DenseMatrix& x) const {
    if (x.rows() != dim() || x.cols() != dim()) {
      throw NumericalError("generator applied to a " + std::to_string(x.rows()) + "x" +
                           std::to_string(x.cols()) + " matrix; expected " +
                           std::to_string(dim()));
    }
  }

  std::vector<int> grading_;
  SparseMatrix h_;
  SparseMatrix k_;
  SparseMatrix k_adj_;
  std::vector<Jump> jumps_;
  std::shared_ptr<PropagatorCache> cache_ = std::make_shared<PropagatorCache>();
};

/// One-shot form of Generator::apply.
inline DenseMatrix liouvillian_apply(const HilbertSpace& space, const OperatorMatrix& hamiltonian,
                                     const DissipatorSpec& dissipators, const DenseMatrix& rho) {
  return Generator(space, hamiltonian, dissipators).apply(rho);
}

enum class Direction { forward, adjoint };

/// Advances an operator by one grid step dt, either in the Schroedinger
/// picture (forward) or with the Hilbert-Schmidt adjoint map.
class Stepper {
 public:
  /// Largest |h| * norm_bound per Runge-Kutta substep.
  static constexpr double kRk4StepNorm = 0.05;

  Stepper(const Generator& gen, const EvolutionConfig& cfg, Direction dir,
          std::vector<int> orders)
      : gen_(&gen), method_(cfg.method), dir_(dir), dt_(cfg.dt) {
    if (method_ == Propagation::rk4) {
      substeps_ = std::max<Index>(
          1, static_cast<Index>(std::ceil(cfg.dt * gen.norm_bound() / kRk4StepNorm)));
      return;
    }
    for (int q : orders) {
      CoherenceSector sector(gen.grading(), q);
      if (sector.size() == 0) continue;
      const DenseMatrix* p = &gen.sector_propagator(q, cfg.dt);
      blocks_.push_back({std::move(sector), p});
    }
  }

  Index rk4_substeps() const { return substeps_; }

  void step(DenseMatrix& x) const {
    if (method_ == Propagation::rk4) {
      const double h = dt_ / static_cast<double>(substeps_);
      for (Index s = 0; s < substeps_; ++s) rk4(x, h);
      return;
    }
    for (const auto& b : blocks_) {
      const DenseVector x_q = b.sector.gather(x);
      const DenseVector v = dir_ == Direction::forward ? DenseVector(*b.step * x_q)
                                                       : DenseVector(b.step->adjoint() * x_q);
      b.sector.scatter(v, x);
    }
  }

 private:
  struct Block {
    CoherenceSector sector;
    const DenseMatrix* step;
  };

  DenseMatrix eval(const DenseMatrix& x) const {
    return dir_ == Direction::forward ? gen_->apply(x) : gen_->apply_adjoint(x);
  }

  void rk4(DenseMatrix& x, double h) const {
    const DenseMatrix k1 = eval(x);
    const DenseMatrix k2 = eval(x + (0.5 * h) * k1);
    const DenseMatrix k3 = eval(x + (0.5 * h) * k2);
    const DenseMatrix k4 = eval(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  const Generator* gen_;
  Propagation method_;
  Direction dir_;
  double dt_;
  Index substeps_ = 1;
  std::vector<Block> blocks_;
};

/// Expected optical excitation <sum s+s + a+a>.
inline double excitation(const std::vector<int>& grading, const DensityMatrix& rho) {
  double n = 0.0;
  for (Index i = 0; i < rho.rows(); ++i) n += grading[static_cast<std::size_t>(i)] * rho(i, i).real();
  return n;
}

inline double hermiticity_error(const DenseMatrix& x) {
  return (x - x.adjoint()).cwiseAbs().maxCoeff();
}

struct EvolutionSummary {
  Index steps = 0;  ///< number of snapshots, t_0 .. t_{steps-1}
  double horizon = 0.0;
  double residual_excitation = 0.0;
  double max_trace_drift = 0.0;
  double max_hermiticity_error = 0.0;
  bool early_stopped = false;
};

/// Largest trace drift tolerated before the run is declared unstable.
inline constexpr double kTraceDriftAbort = 1e-4;

/// Evolves rho0 and calls visit(k, t_k, rho_k) for each snapshot, starting
/// with k = 0. Stops early once the excitation falls below leak_tolerance.
template <typename Visitor>
EvolutionSummary evolve(const DensityMatrix& rho0, const Generator& gen,
                        const EvolutionConfig& cfg, Visitor&& visit) {
  if (rho0.rows() != gen.dim() || rho0.cols() != gen.dim()) {
    throw NumericalError("evolve: initial state dimension mismatch");
  }
  const Complex tr0 = rho0.trace();
  if (std::abs(tr0 - 1.0) > 1e-8) throw NumericalError("evolve: initial state must have unit trace");
  if (hermiticity_error(rho0) > 1e-10) throw NumericalError("evolve: initial state is not Hermitian");

  const Stepper stepper(gen, cfg, Direction::forward, occupied_orders(gen.grading(), rho0));
  const auto max_steps = static_cast<Index>(std::floor(cfg.t_max / cfg.dt + 1e-9));

  EvolutionSummary summary;
  DensityMatrix rho = rho0;
  for (Index k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const double drift = std::abs(rho.trace() - tr0);
    summary.max_trace_drift = std::max(summary.max_trace_drift, drift);
    summary.max_hermiticity_error = std::max(summary.max_hermiticity_error, hermiticity_error(rho));
    if (!(drift <= kTraceDriftAbort)) {
      throw NumericalError("trace drifted by " + std::to_string(drift) + " at t = " +
                           std::to_string(t) + "; reduce numerics.dt");
    }
    visit(k, t, static_cast<const DensityMatrix&>(rho));
    summary.steps = k + 1;
    summary.horizon = t;
    summary.residual_excitation = excitation(gen.grading(), rho);
    if (cfg.leak_tolerance > 0.0 && summary.residual_excitation < cfg.leak_tolerance) {
      summary.early_stopped = true;
      break;
    }
    if (k == max_steps) break;
    stepper.step(rho);
  }
  return summary;
}

/// Stores every snapshot; meant for small spaces.
inline std::vector<DensityMatrix> evolve(const DensityMatrix& rho0, const Generator& gen,
                                         const EvolutionConfig& cfg,
                                         EvolutionSummary* summary = nullptr) {
  std::vector<DensityMatrix> out;
  const auto s = evolve(rho0, gen, cfg, [&](Index, double, const DensityMatrix& rho) {
    out.push_back(rho);
  });
  if (summary) *summary = s;
  return out;
}

/// Two-time field correlation C[j][k] = <a+(t_j) a(t_k)> on a uniform grid.
/// Only j >= k is stored; the upper triangle follows from C[k][j] = conj(C[j][k]).
class CorrelationGrid {
 public:
  CorrelationGrid() = default;
  CorrelationGrid(Index n_t, double dt)
      : n_t_(n_t), dt_(dt), values_(static_cast<std::size_t>(n_t * (n_t + 1) / 2)) {}

  static std::size_t bytes_for(Index n_t) {
    return static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_t + 1) / 2 * sizeof(Complex);
  }

  Index size() const { return n_t_; }
  double dt() const { return dt_; }
  double horizon() const { return n_t_ > 0 ? static_cast<double>(n_t_ - 1) * dt_ : 0.0; }
  std::size_t memory_bytes() const { return values_.size() * sizeof(Complex); }

  Complex operator()(Index j, Index k) const {
    return j >= k ? values_[offset(j, k)] : std::conj(values_[offset(k, j)]);
  }
  Complex& lower(Index j, Index k) { return values_[offset(j, k)]; }

  /// Entries C[j][0..j].
  std::span<const Complex> row(Index j) const {
    return {values_.data() + offset(j, 0), static_cast<std::size_t>(j + 1)};
  }
  std::span<Complex> row(Index j) {
    return {values_.data() + offset(j, 0), static_cast<std::size_t>(j + 1)};
  }
  std::span<const Complex> packed() const { return values_; }
  std::span<Complex> packed() { return values_; }

  std::uint64_t parameter_hash = 0;

 private:
  static std::size_t offset(Index j, Index k) {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(j + 1) / 2 +
           static_cast<std::size_t>(k);
  }

  Index n_t_ = 0;
  double dt_ = 0.0;
  std::vector<Complex> values_;
};

/// Which time ordering the regression propagates.
enum class RegressionSide {
  lower,  ///< C(t_k + tau, t_k) = Tr[a+ Phi_tau(a rho_k)]
  upper,  ///< C(t_k, t_k + tau) = Tr[a Phi_tau(rho_k a+)], stored conjugated
};

struct CorrelationRunInfo {
  EvolutionSummary evolution;
  Index rk4_substeps = 0;
};

namespace detail {

/// grid[k + tau][k] = sum_d conj(heis(tau, d)) * operand(k, d), blocked over tau.
inline void assemble_grid(const DenseMatrix& heis, const DenseMatrix& operand, bool conjugate,
                          int threads, CorrelationGrid& grid) {
  constexpr Index kBlock = 128;
  const Index n_t = grid.size();
  const Index n_blocks = (n_t + kBlock - 1) / kBlock;
  parallel_blocks(n_blocks, threads, [&](Index b) {
    const Index tau0 = b * kBlock;
    const Index rows = std::min(kBlock, n_t - tau0);
    const Index cols = n_t - tau0;
    const DenseMatrix g =
        heis.middleRows(tau0, rows).conjugate() * operand.topRows(cols).transpose();
    for (Index i = 0; i < rows; ++i) {
      const Index tau = tau0 + i;
      for (Index k = 0; k + tau < n_t; ++k) {
        grid.lower(k + tau, k) = conjugate ? std::conj(g(i, k)) : g(i, k);
      }
    }
  });
}

}  // namespace detail

/// Quantum-regression correlation grid of the field operator `a`, over the
/// adaptive horizon of the trajectory started at rho0.
inline CorrelationGrid two_time_correlation(const DensityMatrix& rho0, const Generator& gen,
                                            const OperatorMatrix& a, const EvolutionConfig& cfg,
                                            RegressionSide side = RegressionSide::lower,
                                            CorrelationRunInfo* info = nullptr) {
  if (a.dim() != gen.dim()) throw NumericalError("two_time_correlation: operator dimension");
  // a rho has coherence order -1; rho a+ has order +1. The generator preserves
  // the order, so the regression runs entirely inside one sector.
  const int order = side == RegressionSide::lower ? -1 : 1;
  const CoherenceSector sector(gen.grading(), order);
  const SparseMatrix& a_m = a.matrix();
  const SparseMatrix a_adj = a_m.adjoint();

  // Operand a rho_k (or rho_k a+), one row per snapshot.
  const auto max_rows = static_cast<Index>(std::floor(cfg.t_max / cfg.dt + 1e-9)) + 1;
  std::vector<DenseVector> operands;
  operands.reserve(static_cast<std::size_t>(std::min<Index>(max_rows, 1 << 16)));
  const auto summary = evolve(rho0, gen, cfg, [&](Index, double, const DensityMatrix& rho) {
    const DenseMatrix x = side == RegressionSide::lower ? DenseMatrix(a_m * rho)
                                                        : DenseMatrix(rho * a_adj);
    operands.push_back(sector.gather(x));
  });
  const Index n_t = summary.steps;

  const std::size_t grid_bytes = CorrelationGrid::bytes_for(n_t);
  const std::size_t work_bytes =
      2 * static_cast<std::size_t>(n_t) * static_cast<std::size_t>(sector.size()) * sizeof(Complex);
  if (grid_bytes + work_bytes > cfg.memory_budget_bytes) {
    throw NumericalError("correlation grid needs " + std::to_string((grid_bytes + work_bytes) >> 20) +
                         " MiB for " + std::to_string(n_t) + " time steps, above the budget of " +
                         std::to_string(cfg.memory_budget_bytes >> 20) +
                         " MiB; use a coarser numerics.dt or a shorter numerics.t_max");
  }

  DenseMatrix operand(n_t, sector.size());
  for (Index k = 0; k < n_t; ++k) operand.row(k) = operands[static_cast<std::size_t>(k)].transpose();
  operands = {};

  // Heisenberg-propagated observable: heis(tau) = (Phi_tau)^+ applied to the
  // observable whose Hilbert-Schmidt product with the operand gives the trace.
  const DenseMatrix observable = side == RegressionSide::lower ? DenseMatrix(a_m)
                                                               : DenseMatrix(a_adj);
  DenseMatrix heis(n_t, sector.size());
  const Stepper adjoint(gen, cfg, Direction::adjoint, {order});
  if (cfg.method == Propagation::propagator) {
    const DenseMatrix& p = gen.sector_propagator(order, cfg.dt);
    DenseVector w = sector.gather(observable);
    for (Index tau = 0; tau < n_t; ++tau) {
      heis.row(tau) = w.transpose();
      if (tau + 1 < n_t) w = p.adjoint() * w;
    }
  } else {
    DenseMatrix obs = observable;
    for (Index tau = 0; tau < n_t; ++tau) {
      heis.row(tau) = sector.gather(obs).transpose();
      if (tau + 1 < n_t) adjoint.step(obs);
    }
  }

  CorrelationGrid grid(n_t, cfg.dt);
  detail::assemble_grid(heis, operand, side == RegressionSide::upper, cfg.threads, grid);
  if (info) {
    info->evolution = summary;
    info->rk4_substeps = adjoint.rk4_substeps();
  }
  return grid;
}

/// Largest deviation between the two backends after one step of length dt,
/// for both the Schroedinger and the Heisenberg (adjoint) direction.
inline double backend_agreement(const DensityMatrix& rho0, const Generator& gen,
                                const OperatorMatrix& a, EvolutionConfig cfg) {
  std::vector<int> orders = occupied_orders(gen.grading(), rho0);
  const DenseMatrix obs = a.dense();
  double dev = 0.0;
  for (Direction dir : {Direction::forward, Direction::adjoint}) {
    const DenseMatrix& x0 = dir == Direction::forward ? rho0 : obs;
    const auto q = dir == Direction::forward ? orders : occupied_orders(gen.grading(), obs);
    cfg.method = Propagation::propagator;
    DenseMatrix exact = x0;
    Stepper(gen, cfg, dir, q).step(exact);
    cfg.method = Propagation::rk4;
    DenseMatrix rk = x0;
    Stepper(gen, cfg, dir, q).step(rk);
    dev = std::max(dev, (exact - rk).cwiseAbs().maxCoeff());
  }
  return dev;
}

/// Startup cross-check between the two propagation backends.
inline constexpr double kBackendAgreement = 1e-8;

}  // namespace omtc
