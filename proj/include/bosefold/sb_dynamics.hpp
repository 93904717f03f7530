#pragma once

#include <cmath>
#include <string>

#include "bosefold/errors.hpp"
#include "bosefold/linalg.hpp"
#include "bosefold/mode_set.hpp"

namespace bosefold {

/// Single-body Hamiltonian h_{jk}; row/column 0 is site 1.
class HermitianMatrix {
 public:
  static constexpr double kHermiticityTolerance = 1e-12;

  HermitianMatrix() = default;

  explicit HermitianMatrix(CMatrix entries) : h_(std::move(entries)) {
    if (h_.rows() < 1 || h_.rows() != h_.cols()) {
      throw InvalidDimension("HermitianMatrix: expected a non-empty square matrix");
    }
    if (h_.rows() > 0 && max_abs_diff(h_, CMatrix(h_.adjoint())) > kHermiticityTolerance) {
      throw InvalidInput("HermitianMatrix: input is not Hermitian");
    }
  }

  int dim() const { return static_cast<int>(h_.rows()); }
  const CMatrix& matrix() const { return h_; }
  /// Entry h_{j,k} with 1-based labels.
  cplx operator()(int j, int k) const { return h_(j - 1, k - 1); }

  bool is_real() const { return h_.imag().cwiseAbs().maxCoeff() == 0.0; }

 private:
  CMatrix h_;
};

struct EigenSystem {
  RVector values;
  CMatrix vectors;

  int dim() const { return static_cast<int>(values.size()); }
};

/// Nearest-neighbour hopping on a ring. Entries are assigned, not accumulated,
/// so for N = 2 the wrap bond and the chain bond coincide and h = [[0,1],[1,0]].
inline HermitianMatrix ring_hamiltonian(int n) {
  if (n < 2) throw InvalidDimension("ring_hamiltonian: N must be >= 2, got " + std::to_string(n));
  CMatrix h = CMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const int k = (j + 1) % n;
    h(j, k) = 1.0;
    h(k, j) = 1.0;
  }
  return HermitianMatrix(std::move(h));
}

/// Plane-wave eigenbasis of the ring: eps_l = 2 cos(2 pi l / N) and
/// v_l[k] = exp(2 pi i k l / N) / sqrt(N), for l, k = 1..N. Column l-1 holds v_l.
inline EigenSystem reference_ring_eigensystem(int n) {
  if (n < 2) throw InvalidDimension("reference_ring_eigensystem: N must be >= 2, got " + std::to_string(n));
  EigenSystem es{RVector(n), CMatrix(n, n)};
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int l = 1; l <= n; ++l) {
    es.values[l - 1] = 2.0 * std::cos(2.0 * kPi * l / n);
    for (int k = 1; k <= n; ++k) {
      // reduce k*l mod N so the phase argument stays small and exact
      const double angle = 2.0 * kPi * static_cast<double>((k * l) % n) / n;
      es.vectors(k - 1, l - 1) = std::polar(norm, angle);
    }
  }
  return es;
}

inline EigenSystem hermitian_eigendecompose(const HermitianMatrix& h) {
  HermitianEigen e = jacobi_eigh(h.matrix());
  return EigenSystem{std::move(e.values), std::move(e.vectors)};
}

/// exp(-i h t) from an eigendecomposition of h.
inline CMatrix propagator(const EigenSystem& es, double t) {
  CVector phases(es.dim());
  for (int l = 0; l < es.dim(); ++l) phases[l] = std::polar(1.0, -es.values[l] * t);
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

inline CMatrix propagator(const HermitianMatrix& h, double t) { return propagator(hermitian_eigendecompose(h), t); }

/// Heisenberg evolution of a mode set: a_j^dag(t) = sum_k U_{kj} a_k^dag with
/// U = exp(-i h t), so every mode column is mapped to U times itself.
inline ModeSet propagate_modes(const EigenSystem& es, double t, const ModeSet& initial) {
  if (initial.num_sites() != es.dim()) {
    throw DimensionMismatch("propagate_modes: modes span " + std::to_string(initial.num_sites()) +
                            " sites, Hamiltonian has dimension " + std::to_string(es.dim()));
  }
  if (t == 0.0) return initial;
  return ModeSet(propagator(es, t) * initial.coefficients(), initial.occupations());
}

inline ModeSet propagate_modes(const HermitianMatrix& h, double t, const ModeSet& initial) {
  return propagate_modes(hermitian_eigendecompose(h), t, initial);
}

}  // namespace bosefold
