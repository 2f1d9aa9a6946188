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
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omtc/types.hpp"

namespace omtc {

enum class Level : std::uint8_t { ground = 0, excited = 1 };

/// Label of one product state |atom1, atom2, photon n, phonon m>.
struct BasisIndex {
  Level atom1 = Level::ground;
  Level atom2 = Level::ground;
  int photon = 0;
  int phonon = 0;

  /// Number of optical quanta: excited atoms plus cavity photons.
  int optical_excitations() const {
    return static_cast<int>(atom1) + static_cast<int>(atom2) + photon;
  }

  auto operator<=>(const BasisIndex&) const = default;
};

/// Truncated atom (x) atom (x) photon (x) phonon space.
///
/// Flat ordering: phonon fastest, then photon, then atom2, then atom1. With an
/// excitation cap the same ordering is kept and states above the cap are
/// skipped.
class HilbertSpace {
 public:
  static HilbertSpace build(int photon_cutoff, int phonon_cutoff,
                            std::optional<int> excitation_cap = std::nullopt) {
    if (photon_cutoff < 1) {
      throw ConfigError("photon cutoff must be >= 1 (got " + std::to_string(photon_cutoff) + ")");
    }
    if (phonon_cutoff < 0) {
      throw ConfigError("phonon cutoff must be >= 0 (got " + std::to_string(phonon_cutoff) + ")");
    }
    if (excitation_cap && *excitation_cap != 1) {
      throw ConfigError("excitation cap must be 1 when present (got " +
                        std::to_string(*excitation_cap) + ")");
    }

    HilbertSpace space;
    space.photon_cutoff_ = photon_cutoff;
    space.phonon_cutoff_ = phonon_cutoff;
    space.excitation_cap_ = excitation_cap;

    const int n_photon = photon_cutoff + 1;
    const int n_phonon = phonon_cutoff + 1;
    space.lookup_.assign(static_cast<std::size_t>(4 * n_photon * n_phonon), -1);
    for (int a1 = 0; a1 < 2; ++a1) {
      for (int a2 = 0; a2 < 2; ++a2) {
        for (int n = 0; n < n_photon; ++n) {
          for (int m = 0; m < n_phonon; ++m) {
            const BasisIndex s{static_cast<Level>(a1), static_cast<Level>(a2), n, m};
            if (excitation_cap && s.optical_excitations() > *excitation_cap) continue;
            space.lookup_[space.product_offset(s)] = static_cast<Index>(space.states_.size());
            space.states_.push_back(s);
            space.excitations_.push_back(s.optical_excitations());
          }
        }
      }
    }
    return space;
  }

  int photon_cutoff() const { return photon_cutoff_; }
  int phonon_cutoff() const { return phonon_cutoff_; }
  std::optional<int> excitation_cap() const { return excitation_cap_; }
  Index dim() const { return static_cast<Index>(states_.size()); }

  const BasisIndex& state(Index i) const { return states_.at(static_cast<std::size_t>(i)); }

  /// Flat index of `s`, or nullopt when `s` is outside the cutoffs or the cap.
  std::optional<Index> index(const BasisIndex& s) const {
    if (s.photon < 0 || s.photon > photon_cutoff_ || s.phonon < 0 || s.phonon > phonon_cutoff_) {
      return std::nullopt;
    }
    const Index i = lookup_[product_offset(s)];
    if (i < 0) return std::nullopt;
    return i;
  }

  /// Optical excitation number of every basis state, in flat order.
  const std::vector<int>& excitation_grading() const { return excitations_; }

  /// Same cutoffs without the excitation cap.
  HilbertSpace uncapped() const { return build(photon_cutoff_, phonon_cutoff_, std::nullopt); }

  bool operator==(const HilbertSpace& other) const {
    return photon_cutoff_ == other.photon_cutoff_ && phonon_cutoff_ == other.phonon_cutoff_ &&
           excitation_cap_ == other.excitation_cap_;
  }

 private:
  HilbertSpace() = default;

  std::size_t product_offset(const BasisIndex& s) const {
    const int n_photon = photon_cutoff_ + 1;
    const int n_phonon = phonon_cutoff_ + 1;
    const int atoms = 2 * static_cast<int>(s.atom1) + static_cast<int>(s.atom2);
    return static_cast<std::size_t>((atoms * n_photon + s.photon) * n_phonon + s.phonon);
  }

  int photon_cutoff_ = 1;
  int phonon_cutoff_ = 0;
  std::optional<int> excitation_cap_;
  std::vector<BasisIndex> states_;
  std::vector<int> excitations_;
  std::vector<Index> lookup_;
};

inline HilbertSpace build_space(int photon_cutoff, int phonon_cutoff,
                                std::optional<int> excitation_cap = std::nullopt) {
  return HilbertSpace::build(photon_cutoff, phonon_cutoff, excitation_cap);
}

/// Sparse operator on a HilbertSpace. Entries are stored in a fixed row-major
/// order, so identical builds are bit-identical.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;

  explicit OperatorMatrix(SparseMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw NumericalError("operator matrix must be square");
    m_.makeCompressed();
    for (Index k = 0; k < m_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m_, k); it; ++it) {
        if (!std::isfinite(it.value().real()) || !std::isfinite(it.value().imag())) {
          throw NumericalError("operator matrix has a non-finite entry");
        }
      }
    }
  }

  static OperatorMatrix zero(Index dim) { return OperatorMatrix(SparseMatrix(dim, dim)); }

  static OperatorMatrix identity(Index dim) {
    SparseMatrix id(dim, dim);
    id.setIdentity();
    return OperatorMatrix(std::move(id));
  }

  Index dim() const { return m_.rows(); }
  const SparseMatrix& matrix() const { return m_; }
  DenseMatrix dense() const { return DenseMatrix(m_); }

  OperatorMatrix adjoint() const { return OperatorMatrix(SparseMatrix(m_.adjoint())); }

  friend OperatorMatrix operator+(const OperatorMatrix& x, const OperatorMatrix& y) {
    check_same(x, y);
    return OperatorMatrix(SparseMatrix(x.m_ + y.m_));
  }
  friend OperatorMatrix operator-(const OperatorMatrix& x, const OperatorMatrix& y) {
    check_same(x, y);
    return OperatorMatrix(SparseMatrix(x.m_ - y.m_));
  }
  friend OperatorMatrix operator*(const OperatorMatrix& x, const OperatorMatrix& y) {
    check_same(x, y);
    return OperatorMatrix(SparseMatrix((x.m_ * y.m_).pruned()));
  }
  friend OperatorMatrix operator*(Complex c, const OperatorMatrix& x) {
    return OperatorMatrix(SparseMatrix(c * x.m_));
  }
  friend OperatorMatrix operator*(double c, const OperatorMatrix& x) {
    return OperatorMatrix(SparseMatrix(Complex(c, 0.0) * x.m_));
  }

 private:
  static void check_same(const OperatorMatrix& x, const OperatorMatrix& y) {
    if (x.dim() != y.dim()) {
      throw NumericalError("operator dimension mismatch: " + std::to_string(x.dim()) + " vs " +
                           std::to_string(y.dim()));
    }
  }

  SparseMatrix m_;
};

/// Restricts an operator on `from` to the states shared with `to`.
inline OperatorMatrix project(const OperatorMatrix& op, const HilbertSpace& from,
                              const HilbertSpace& to) {
  if (op.dim() != from.dim()) throw NumericalError("project: operator dimension mismatch");
  std::vector<Index> map(static_cast<std::size_t>(from.dim()), -1);
  for (Index i = 0; i < from.dim(); ++i) {
    if (const auto j = to.index(from.state(i))) map[static_cast<std::size_t>(i)] = *j;
  }
  std::vector<Eigen::Triplet<Complex>> triplets;
  const SparseMatrix& m = op.matrix();
  for (Index r = 0; r < m.outerSize(); ++r) {
    const Index rr = map[static_cast<std::size_t>(r)];
    if (rr < 0) continue;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      const Index cc = map[static_cast<std::size_t>(it.col())];
      if (cc >= 0) triplets.emplace_back(rr, cc, it.value());
    }
  }
  SparseMatrix out(to.dim(), to.dim());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return OperatorMatrix(std::move(out));
}

struct LadderOperators {
  OperatorMatrix a;       ///< cavity photon annihilation
  OperatorMatrix b;       ///< phonon annihilation
  OperatorMatrix sigma1;  ///< |g><e| on atom 1
  OperatorMatrix sigma2;  ///< |g><e| on atom 2
};

namespace detail {

template <typename Lower>
OperatorMatrix lowering_operator(const HilbertSpace& space, Lower lower) {
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (Index col = 0; col < space.dim(); ++col) {
    BasisIndex target = space.state(col);
    const double amplitude = lower(target);
    if (amplitude == 0.0) continue;
    if (const auto row = space.index(target)) triplets.emplace_back(*row, col, amplitude);
  }
  SparseMatrix m(space.dim(), space.dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return OperatorMatrix(std::move(m));
}

}  // namespace detail

inline LadderOperators ladder_operators(const HilbertSpace& space) {
  auto a = detail::lowering_operator(space, [](BasisIndex& s) {
    if (s.photon == 0) return 0.0;
    const double amp = std::sqrt(static_cast<double>(s.photon));
    --s.photon;
    return amp;
  });
  auto b = detail::lowering_operator(space, [](BasisIndex& s) {
    if (s.phonon == 0) return 0.0;
    const double amp = std::sqrt(static_cast<double>(s.phonon));
    --s.phonon;
    return amp;
  });
  auto sigma1 = detail::lowering_operator(space, [](BasisIndex& s) {
    if (s.atom1 != Level::excited) return 0.0;
    s.atom1 = Level::ground;
    return 1.0;
  });
  auto sigma2 = detail::lowering_operator(space, [](BasisIndex& s) {
    if (s.atom2 != Level::excited) return 0.0;
    s.atom2 = Level::ground;
    return 1.0;
  });
  return {std::move(a), std::move(b), std::move(sigma1), std::move(sigma2)};
}

/// Tr(op * rho).
inline Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
  if (rho.rows() != op.dim() || rho.cols() != op.dim()) {
    throw NumericalError("expectation: operator is " + std::to_string(op.dim()) +
                         "-dimensional but rho is " + std::to_string(rho.rows()) + "x" +
                         std::to_string(rho.cols()));
  }
  // Tr(A rho) = sum_ij A_ij rho_ji
  Complex acc{0.0, 0.0};
  const SparseMatrix& m = op.matrix();
  for (Index i = 0; i < m.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) acc += it.value() * rho(it.col(), i);
  }
  return acc;
}

}  // namespace omtc
