#pragma once

// Brute-force Fock-space reference: full basis enumeration, exact states,
// exact evolution and single-site reduced density matrices.

#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bosefold/errors.hpp"
#include "bosefold/linalg.hpp"
#include "bosefold/mode_set.hpp"
#include "bosefold/sb_dynamics.hpp"

namespace bosefold {

inline constexpr std::uint64_t kDefaultBasisBudget = 5'000'000;

/// Number of ways to put M bosons on N sites, saturating at uint64 max.
inline std::uint64_t basis_size(int n_sites, int n_bosons) {
  if (n_sites <= 0) return n_bosons == 0 ? 1 : 0;
  // C(M + N - 1, N - 1), accumulated so each partial product is an exact binomial.
  const int k = n_sites - 1;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    const auto num = static_cast<std::uint64_t>(n_bosons + i);
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

/// All occupation tuples (n_1..n_N) with sum M, ordered lexicographically
/// descending on (n_N, ..., n_1): the first state has every boson on site N.
class FockBasis {
 public:
  FockBasis(int n_sites, int n_bosons, std::uint64_t budget = kDefaultBasisBudget)
      : n_sites_(n_sites), n_bosons_(n_bosons) {
    if (n_sites < 1 || n_bosons < 0) throw InvalidDimension("FockBasis: need N >= 1 and M >= 0");
    const std::uint64_t size = basis_size(n_sites, n_bosons);
    if (size > budget) {
      throw BudgetExceeded("FockBasis: N=" + std::to_string(n_sites) + ", M=" + std::to_string(n_bosons) + " needs " +
                           std::to_string(size) + " states, budget is " + std::to_string(budget));
    }
    size_ = static_cast<std::size_t>(size);
    binom_.assign(static_cast<std::size_t>((n_bosons + n_sites + 1) * (n_sites + 1)), 0);
    for (int r = 0; r <= n_bosons; ++r) {
      for (int parts = 1; parts <= n_sites; ++parts) count_ref(r, parts) = basis_size(parts, r);
    }
    occupations_.reserve(size_ * static_cast<std::size_t>(n_sites));
    std::vector<int> tuple(static_cast<std::size_t>(n_sites), 0);
    enumerate(n_sites, n_bosons, tuple);
  }

  int num_sites() const { return n_sites_; }
  int num_bosons() const { return n_bosons_; }
  std::size_t size() const { return size_; }

  /// Occupation of site (1..N) in basis state `index`.
  int occupation(std::size_t index, int site) const {
    return occupations_[index * static_cast<std::size_t>(n_sites_) + static_cast<std::size_t>(site - 1)];
  }

  /// Occupations (n_1..n_N) of a basis state.
  std::vector<int> state(std::size_t index) const {
    const auto first = occupations_.begin() + static_cast<std::ptrdiff_t>(index * static_cast<std::size_t>(n_sites_));
    return {first, first + n_sites_};
  }

  /// Rank of an occupation tuple (n_1..n_N).
  std::size_t index_of(const std::vector<int>& occ) const {
    if (static_cast<int>(occ.size()) != n_sites_) throw DimensionMismatch("FockBasis::index_of: wrong tuple length");
    std::size_t idx = 0;
    int remaining = n_bosons_;
    for (int site = n_sites_; site >= 2; --site) {
      const int x = occ[static_cast<std::size_t>(site - 1)];
      if (x < 0 || x > remaining) throw InvalidInput("FockBasis::index_of: occupation tuple outside basis");
      // tuples sharing the prefix with a larger entry here come first
      for (int v = remaining; v > x; --v) idx += count(remaining - v, site - 1);
      remaining -= x;
    }
    if (occ[0] != remaining) throw InvalidInput("FockBasis::index_of: occupations do not sum to M");
    return idx;
  }

 private:
  std::uint64_t count(int r, int parts) const { return binom_[static_cast<std::size_t>(r * (n_sites_ + 1) + parts)]; }
  std::uint64_t& count_ref(int r, int parts) { return binom_[static_cast<std::size_t>(r * (n_sites_ + 1) + parts)]; }

  void enumerate(int site, int remaining, std::vector<int>& tuple) {
    if (site == 1) {
      tuple[0] = remaining;
      occupations_.insert(occupations_.end(), tuple.begin(), tuple.end());
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      tuple[static_cast<std::size_t>(site - 1)] = v;
      enumerate(site - 1, remaining - v, tuple);
    }
  }

  int n_sites_;
  int n_bosons_;
  std::size_t size_ = 0;
  std::vector<int> occupations_;
  std::vector<std::uint64_t> binom_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

inline BasisPtr enumerate_basis(int n_sites, int n_bosons, std::uint64_t budget = kDefaultBasisBudget) {
  return std::make_shared<const FockBasis>(n_sites, n_bosons, budget);
}

struct DenseState {
  BasisPtr basis;
  CVector amplitudes;

  double norm() const { return amplitudes.norm(); }
};

inline DenseState basis_state(BasisPtr basis, const std::vector<int>& occupations) {
  DenseState s{basis, CVector::Zero(static_cast<Eigen::Index>(basis->size()))};
  s.amplitudes[static_cast<Eigen::Index>(basis->index_of(occupations))] = 1.0;
  return s;
}

inline void require_same_space(const FockBasis& a, const FockBasis& b, const char* where) {
  if (a.num_sites() != b.num_sites() || a.num_bosons() != b.num_bosons()) {
    throw DimensionMismatch(std::string(where) + ": states live in different Fock spaces");
  }
}

/// <a|b>
inline cplx overlap(const DenseState& a, const DenseState& b) {
  require_same_space(*a.basis, *b.basis, "overlap");
  return a.amplitudes.dot(b.amplitudes);
}

using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Many-body matrix of sum_{jk} h_{jk} a_j^dag a_k in the given basis.
inline SparseOperator build_hamiltonian(const HermitianMatrix& h, const FockBasis& basis) {
  const int n = basis.num_sites();
  if (h.dim() != n) throw DimensionMismatch("build_hamiltonian: h and basis disagree on N");
  std::vector<Eigen::Triplet<cplx>> entries;
  const auto dim = static_cast<Eigen::Index>(basis.size());
  for (std::size_t col = 0; col < basis.size(); ++col) {
    std::vector<int> occ = basis.state(col);
    cplx diag = 0.0;
    for (int j = 1; j <= n; ++j) diag += h(j, j) * static_cast<double>(occ[static_cast<std::size_t>(j - 1)]);
    if (diag != cplx{0.0, 0.0}) entries.emplace_back(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col), diag);
    for (int k = 1; k <= n; ++k) {
      const int nk = occ[static_cast<std::size_t>(k - 1)];
      if (nk == 0) continue;
      for (int j = 1; j <= n; ++j) {
        if (j == k || h(j, k) == cplx{0.0, 0.0}) continue;
        const int nj = occ[static_cast<std::size_t>(j - 1)];
        occ[static_cast<std::size_t>(k - 1)] -= 1;
        occ[static_cast<std::size_t>(j - 1)] += 1;
        const auto row = static_cast<Eigen::Index>(basis.index_of(occ));
        occ[static_cast<std::size_t>(k - 1)] += 1;
        occ[static_cast<std::size_t>(j - 1)] -= 1;
        entries.emplace_back(row, static_cast<Eigen::Index>(col), h(j, k) * std::sqrt(static_cast<double>((nj + 1) * nk)));
      }
    }
  }
  SparseOperator op(dim, dim);
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

namespace detail {

// sum_j c_j a_j^dag applied to a state with m bosons; result has m + 1.
inline DenseState create(const DenseState& in, const CVector& coeffs) {
  const FockBasis& src = *in.basis;
  const int n = src.num_sites();
  auto dst = enumerate_basis(n, src.num_bosons() + 1, std::numeric_limits<std::uint64_t>::max());
  DenseState out{dst, CVector::Zero(static_cast<Eigen::Index>(dst->size()))};
  for (std::size_t i = 0; i < src.size(); ++i) {
    const cplx amp = in.amplitudes[static_cast<Eigen::Index>(i)];
    if (amp == cplx{0.0, 0.0}) continue;
    std::vector<int> occ = src.state(i);
    for (int j = 0; j < n; ++j) {
      if (coeffs[j] == cplx{0.0, 0.0}) continue;
      const double boost = std::sqrt(static_cast<double>(occ[static_cast<std::size_t>(j)] + 1));
      occ[static_cast<std::size_t>(j)] += 1;
      out.amplitudes[static_cast<Eigen::Index>(dst->index_of(occ))] += coeffs[j] * boost * amp;
      occ[static_cast<std::size_t>(j)] -= 1;
    }
  }
  return out;
}

}  // namespace detail

/// prod_q (sum_j c_{jq} a_j^dag)^{n_q} / sqrt(n_q!) |0>, expanded in `basis`.
inline DenseState apply_mode_polynomial(const ModeSet& modes, BasisPtr basis) {
  if (modes.num_sites() != basis->num_sites() || modes.num_bosons() != basis->num_bosons()) {
    throw DimensionMismatch("apply_mode_polynomial: mode set does not match basis (N=" +
                            std::to_string(basis->num_sites()) + ", M=" + std::to_string(basis->num_bosons()) + ")");
  }
  const int n = modes.num_sites();
  DenseState state{enumerate_basis(n, 0), CVector::Ones(1)};
  for (int q = 0; q < modes.num_modes(); ++q) {
    const CVector coeffs = modes.coefficients().col(q);
    const int power = modes.occupations()[static_cast<std::size_t>(q)];
    for (int r = 1; r <= power; ++r) {
      state = detail::create(state, coeffs);
      state.amplitudes /= std::sqrt(static_cast<double>(r));
    }
  }
  DenseState out{basis, std::move(state.amplitudes)};
  const double deviation = std::abs(out.norm() - 1.0);
  if (deviation > 1e-6) {
    throw InconsistentModes("apply_mode_polynomial: state norm deviates from 1 by " + std::to_string(deviation));
  }
  return out;
}

/// <psi|H|psi>; the imaginary part is dropped (it vanishes for Hermitian H).
inline double energy_expectation(const DenseState& state, const SparseOperator& h) {
  if (h.rows() != state.amplitudes.size()) throw DimensionMismatch("energy_expectation: operator size mismatch");
  const CVector hpsi = h * state.amplitudes;
  return state.amplitudes.dot(hpsi).real();
}

enum class PropagationMethod { automatic, dense_diagonalization, chebyshev };

/// exp(-i H t) on dense states. Small bases are diagonalized once; larger ones
/// use a Chebyshev expansion, which is exact to rounding for any t.
class Propagator {
 public:
  static constexpr std::size_t kDenseLimit = 2000;

  explicit Propagator(SparseOperator h, PropagationMethod method = PropagationMethod::automatic) : h_(std::move(h)) {
    if (method == PropagationMethod::automatic) {
      method = static_cast<std::size_t>(h_.rows()) <= kDenseLimit ? PropagationMethod::dense_diagonalization
                                                                   : PropagationMethod::chebyshev;
    }
    method_ = method;
    if (method_ == PropagationMethod::dense_diagonalization) {
      const CMatrix dense = CMatrix(h_);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(dense);
      if (es.info() != Eigen::Success) throw NumericalFailure("Propagator: dense diagonalization failed");
      energies_ = es.eigenvalues();
      vectors_ = es.eigenvectors();
    } else {
      // Gershgorin bounds on the spectrum
      double lo = std::numeric_limits<double>::max();
      double hi = std::numeric_limits<double>::lowest();
      for (Eigen::Index r = 0; r < h_.outerSize(); ++r) {
        double centre = 0.0;
        double radius = 0.0;
        for (SparseOperator::InnerIterator it(h_, r); it; ++it) {
          if (it.col() == r) centre = it.value().real();
          else radius += std::abs(it.value());
        }
        lo = std::min(lo, centre - radius);
        hi = std::max(hi, centre + radius);
      }
      centre_ = 0.5 * (hi + lo);
      half_width_ = std::max(0.5 * (hi - lo), 1e-12) * 1.01;
    }
  }

  PropagationMethod method() const { return method_; }
  const SparseOperator& hamiltonian() const { return h_; }

  DenseState evolve(const DenseState& state, double t) const {
    if (state.amplitudes.size() != h_.rows()) throw DimensionMismatch("evolve: state and Hamiltonian sizes differ");
    if (t == 0.0) return state;
    if (method_ == PropagationMethod::dense_diagonalization) {
      CVector coeffs = vectors_.adjoint() * state.amplitudes;
      for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] *= std::polar(1.0, -energies_[i] * t);
      return DenseState{state.basis, vectors_ * coeffs};
    }
    return DenseState{state.basis, chebyshev(state.amplitudes, t)};
  }

 private:
  // J_0(x)..J_{kmax}(x) by Miller's downward recurrence, normalized with
  // J_0 + 2 sum J_{2k} = 1. Requires x > 0.
  static std::vector<double> bessel_series(double x, int kmax) {
    const int start = kmax + 20 + static_cast<int>(std::sqrt(40.0 * kmax)) + ((kmax & 1) ? 1 : 0);
    std::vector<double> j(static_cast<std::size_t>(start + 2), 0.0);
    j[static_cast<std::size_t>(start + 1)] = 0.0;
    j[static_cast<std::size_t>(start)] = 1e-300;
    for (int k = start; k >= 1; --k) {
      j[static_cast<std::size_t>(k - 1)] = (2.0 * k / x) * j[static_cast<std::size_t>(k)] - j[static_cast<std::size_t>(k + 1)];
      if (std::abs(j[static_cast<std::size_t>(k - 1)]) > 1e250) {
        for (int r = k - 1; r <= start; ++r) j[static_cast<std::size_t>(r)] *= 1e-250;
      }
    }
    double norm = j[0];
    for (int k = 2; k <= start; k += 2) norm += 2.0 * j[static_cast<std::size_t>(k)];
    j.resize(static_cast<std::size_t>(kmax + 1));
    for (double& v : j) v /= norm;
    return j;
  }

  CVector chebyshev(const CVector& psi, double t) const {
    const double x = half_width_ * std::abs(t);
    const int kmax = static_cast<int>(x + 12.0 * std::cbrt(x) + 40.0);
    std::vector<double> bessel = bessel_series(x, kmax);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    auto scaled = [&](const CVector& v) -> CVector { return (h_ * v - centre_ * v) / half_width_; };

    CVector prev = psi;
    CVector curr = scaled(psi);
    CVector out = bessel[0] * prev;
    cplx minus_i_pow = cplx{0.0, -1.0} * sign;  // (-i)^k J_k(x t/|t|), k = 1
    out += 2.0 * minus_i_pow * bessel[1] * curr;
    for (int k = 2; k <= kmax; ++k) {
      CVector next = 2.0 * scaled(curr) - prev;
      prev = std::move(curr);
      curr = std::move(next);
      minus_i_pow *= cplx{0.0, -1.0} * sign;
      out += 2.0 * minus_i_pow * bessel[static_cast<std::size_t>(k)] * curr;
    }
    return out * std::polar(1.0, -centre_ * t);
  }

  SparseOperator h_;
  PropagationMethod method_ = PropagationMethod::automatic;
  RVector energies_;
  CMatrix vectors_;
  double centre_ = 0.0;
  double half_width_ = 1.0;
};

inline DenseState evolve(const DenseState& state, const SparseOperator& h, double t) {
  return Propagator(h).evolve(state, t);
}

/// Reduced density matrix of one site (1..N), (M+1) x (M+1). Basis states are
/// grouped by the occupations of the other sites; only states sharing that
/// environment contribute to an element.
inline CMatrix single_site_rdm(const DenseState& state, int site) {
  const FockBasis& basis = *state.basis;
  if (site < 1 || site > basis.num_sites()) throw OutOfRange("single_site_rdm: site " + std::to_string(site));
  const int d = basis.num_bosons() + 1;
  std::map<std::vector<int>, std::vector<std::pair<int, cplx>>> groups;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const cplx amp = state.amplitudes[static_cast<Eigen::Index>(i)];
    if (amp == cplx{0.0, 0.0}) continue;
    std::vector<int> env = basis.state(i);
    const int p = env[static_cast<std::size_t>(site - 1)];
    env.erase(env.begin() + (site - 1));
    groups[std::move(env)].emplace_back(p, amp);
  }
  CMatrix rho = CMatrix::Zero(d, d);
  for (const auto& [env, members] : groups) {
    for (const auto& [p, a] : members) {
      for (const auto& [q, b] : members) rho(p, q) += a * std::conj(b);
    }
  }
  return rho;
}

/// Von Neumann entropy (natural log) of a density matrix.
inline double von_neumann_entropy(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double w = es.eigenvalues()[i];
    if (w > 0.0) s -= w * std::log(w);
  }
  return s;
}

}  // namespace bosefold
