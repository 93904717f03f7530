#pragma once

// Number-conserving matrix product state for a bosonic chain of N sites and
// M bosons (local dimension M + 1).
//
// Site order: site 1 is the right end of the chain. Storage index i holds
// site N - i, so storage runs from site N (index 0) down to site 1. Storage
// bond b (0..N) sits left of storage index b; bond label n (between sites n
// and n+1) is storage bond N - n. Bond labels 0 and N are the chain ends and
// carry a single Schmidt value 1.
//
// Tensors are kept in right-canonical form B = Gamma * lambda_right together
// with the Schmidt values of every bond. The Vidal tensors Gamma are recovered
// on demand (see snapshot). Every bond channel carries a definite number of
// bosons to its right (towards site 1).

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "bosefold/errors.hpp"
#include "bosefold/fock.hpp"
#include "bosefold/linalg.hpp"

namespace bosefold {

inline constexpr std::size_t kUnboundedChi = 0;

struct MpsOptions {
  std::size_t chi_cap = kUnboundedChi;  // 0 = unbounded
  bool block_sparse = true;             // SVD per boson-number sector
  double zero_threshold = 1e-14;        // relative to the largest singular value
};

/// Diagonal single-site gate, entries indexed by occupation 0..M.
struct SingleSiteGate {
  CVector diagonal;
};

/// exp(i phi n): entries exp(i phi p), p = 0..M.
inline SingleSiteGate phase_gate(double phi, int max_occupation) {
  SingleSiteGate g{CVector(max_occupation + 1)};
  for (int p = 0; p <= max_occupation; ++p) g.diagonal[p] = std::polar(1.0, phi * p);
  return g;
}

/// Two-site gate that conserves the pair occupation. blocks[n] acts on the
/// states |p, n - p> (p = occupation of the lower site j, the other belongs to
/// site j+1), indexed by p = 0..n.
struct TwoSiteGate {
  int max_occupation = 0;
  std::vector<CMatrix> blocks;

  int local_dim() const { return max_occupation + 1; }

  /// Full d^2 x d^2 matrix, basis index p_j * d + p_{j+1}.
  CMatrix dense() const {
    const int d = local_dim();
    CMatrix g = CMatrix::Zero(d * d, d * d);
    for (int n = 0; n <= max_occupation; ++n) {
      for (int p = 0; p <= n; ++p) {
        for (int q = 0; q <= n; ++q) g(p * d + (n - p), q * d + (n - q)) = blocks[static_cast<std::size_t>(n)](p, q);
      }
    }
    return g;
  }
};

/// Generator J^y_{j+1,j} = (a_{j+1}^dag a_j - a_j^dag a_{j+1}) / 2i restricted to
/// pair occupation n, basis |p_j, n - p_j>.
inline CMatrix rotation_generator_block(int n) {
  CMatrix j = CMatrix::Zero(n + 1, n + 1);
  for (int p = 0; p <= n; ++p) {
    if (p > 0) j(p - 1, p) = cplx{0.0, -0.5 * std::sqrt(static_cast<double>(p) * (n - p + 1))};
    if (p < n) j(p + 1, p) = cplx{0.0, 0.5 * std::sqrt(static_cast<double>(p + 1) * (n - p))};
  }
  return j;
}

/// exp(i theta J^y_{j+1,j}) built block by block from the eigensystem of J^y.
/// Each block is real orthogonal (a Wigner small-d matrix of spin n/2).
inline TwoSiteGate rotation_gate(double theta, int max_occupation) {
  TwoSiteGate g;
  g.max_occupation = max_occupation;
  g.blocks.reserve(static_cast<std::size_t>(max_occupation + 1));
  for (int n = 0; n <= max_occupation; ++n) {
    const HermitianEigen es = jacobi_eigh(rotation_generator_block(n));
    CVector phases(n + 1);
    for (int k = 0; k <= n; ++k) phases[k] = std::polar(1.0, theta * es.values[k]);
    CMatrix block = es.vectors * phases.asDiagonal() * es.vectors.adjoint();
    if (block.imag().cwiseAbs().maxCoeff() > 1e-10) throw NumericalFailure("rotation_gate: block is not real");
    g.blocks.push_back(CMatrix(block.real().cast<cplx>()));
  }
  return g;
}

class MpsState {
 public:
  /// Product Fock state; occupations are given for sites 1..N.
  MpsState(const std::vector<int>& occupations, int n_bosons, MpsOptions options = {})
      : n_sites_(static_cast<int>(occupations.size())), n_bosons_(n_bosons), options_(options) {
    if (n_sites_ < 1) throw InvalidDimension("MpsState: need at least one site");
    if (n_bosons < 0) throw InvalidInput("MpsState: negative boson number");
    int total = 0;
    for (int n : occupations) {
      if (n < 0 || n > n_bosons) throw InvalidInput("MpsState: occupation outside 0..M");
      total += n;
    }
    if (total != n_bosons) {
      throw InvalidInput("MpsState: occupations sum to " + std::to_string(total) + ", expected M = " +
                         std::to_string(n_bosons));
    }
    const int d = local_dim();
    tensors_.resize(static_cast<std::size_t>(n_sites_));
    lambda_.assign(static_cast<std::size_t>(n_sites_ + 1), RVector::Ones(1));
    charges_.assign(static_cast<std::size_t>(n_sites_ + 1), std::vector<int>{0});
    charges_[0][0] = n_bosons;
    for (int i = 0; i < n_sites_; ++i) {
      const int p = occupations[static_cast<std::size_t>(n_sites_ - 1 - i)];
      auto& t = tensors_[static_cast<std::size_t>(i)];
      t.assign(static_cast<std::size_t>(d), CMatrix::Zero(1, 1));
      t[static_cast<std::size_t>(p)](0, 0) = 1.0;
      charges_[static_cast<std::size_t>(i + 1)][0] = charges_[static_cast<std::size_t>(i)][0] - p;
    }
  }

  int num_sites() const { return n_sites_; }
  int num_bosons() const { return n_bosons_; }
  int local_dim() const { return n_bosons_ + 1; }
  const MpsOptions& options() const { return options_; }

  /// Cumulative sum over updates of the discarded (normalized) squared
  /// singular values.
  double discarded_weight() const { return discarded_weight_; }
  /// |1 - sum lambda^2| of the most recent two-site update, before renormalization.
  double last_norm_deviation() const { return last_norm_deviation_; }
  /// Frobenius norm of two-site amplitudes that violated the boson-number
  /// sectors in the most recent block-sparse update.
  double last_charge_leak() const { return last_charge_leak_; }

  /// Schmidt values on bond n (between sites n and n+1), n = 0..N.
  const RVector& schmidt_values(int bond) const { return lambda_[storage_bond(bond)]; }
  /// Bosons to the right (sites 1..n) of every channel on bond n; empty when
  /// sectors are not tracked (dense updates).
  const std::vector<int>& bond_charges(int bond) const { return charges_[storage_bond(bond)]; }
  std::size_t bond_dimension(int bond) const { return static_cast<std::size_t>(schmidt_values(bond).size()); }

  std::size_t max_bond_dimension() const {
    std::size_t chi = 0;
    for (const auto& l : lambda_) chi = std::max(chi, static_cast<std::size_t>(l.size()));
    return chi;
  }

  /// Right-canonical tensor of storage index i, one chi_left x chi_right matrix per occupation.
  const std::vector<CMatrix>& storage_tensor(int i) const { return tensors_[static_cast<std::size_t>(i)]; }
  const RVector& storage_lambda(int b) const { return lambda_[static_cast<std::size_t>(b)]; }
  const std::vector<int>& storage_charges(int b) const { return charges_[static_cast<std::size_t>(b)]; }

  void apply_single_site(int site, const SingleSiteGate& gate) {
    if (site < 1 || site > n_sites_) throw OutOfRange("apply_single_site: site " + std::to_string(site));
    if (gate.diagonal.size() != local_dim()) throw DimensionMismatch("apply_single_site: gate dimension");
    auto& t = tensors_[static_cast<std::size_t>(n_sites_ - site)];
    for (int p = 0; p < local_dim(); ++p) t[static_cast<std::size_t>(p)] *= gate.diagonal[p];
  }

  /// Apply a gate to sites (bond, bond + 1) and restore canonical form.
  void apply_two_site(int bond, const TwoSiteGate& gate) {
    if (bond < 1 || bond >= n_sites_) throw OutOfRange("apply_two_site: bond " + std::to_string(bond));
    if (gate.max_occupation != n_bosons_) throw DimensionMismatch("apply_two_site: gate dimension");
    update_pair(n_sites_ - bond - 1, gate);
  }

  // Snapshot support: rebuild from Vidal data (see snapshot.hpp).
  struct RawData {
    std::vector<std::vector<CMatrix>> tensors;
    std::vector<RVector> lambda;
    std::vector<std::vector<int>> charges;
    double discarded_weight = 0.0;
  };
  MpsState(int n_sites, int n_bosons, MpsOptions options, RawData raw)
      : n_sites_(n_sites),
        n_bosons_(n_bosons),
        options_(options),
        tensors_(std::move(raw.tensors)),
        lambda_(std::move(raw.lambda)),
        charges_(std::move(raw.charges)),
        discarded_weight_(raw.discarded_weight) {}

 private:
  std::size_t storage_bond(int bond) const {
    if (bond < 0 || bond > n_sites_) throw OutOfRange("bond " + std::to_string(bond));
    return static_cast<std::size_t>(n_sites_ - bond);
  }

  struct Triplet {
    double value;
    int charge;
    std::size_t block;
    Eigen::Index column;
  };

  void update_pair(int i, const TwoSiteGate& gate) {
    const int d = local_dim();
    const auto si = static_cast<std::size_t>(i);
    const auto& left = tensors_[si];
    const auto& right = tensors_[si + 1];
    const RVector& lam_left = lambda_[si];
    const Eigen::Index chi_l = lam_left.size();
    const Eigen::Index chi_r = lambda_[si + 2].size();
    const bool sectors = options_.block_sparse;

    // theta[pl][pr] = sum gate * B_i[pl'] B_{i+1}[pr'] (pl: site j+1, pr: site j)
    std::vector<std::vector<CMatrix>> pair(static_cast<std::size_t>(d), std::vector<CMatrix>(static_cast<std::size_t>(d)));
    for (int pl = 0; pl < d; ++pl) {
      for (int pr = 0; pl + pr < d; ++pr) {
        pair[static_cast<std::size_t>(pl)][static_cast<std::size_t>(pr)] =
            left[static_cast<std::size_t>(pl)] * right[static_cast<std::size_t>(pr)];
      }
    }
    std::vector<std::vector<CMatrix>> theta(static_cast<std::size_t>(d), std::vector<CMatrix>(static_cast<std::size_t>(d)));
    for (int n = 0; n < d; ++n) {
      const CMatrix& block = gate.blocks[static_cast<std::size_t>(n)];
      for (int pr = 0; pr <= n; ++pr) {
        CMatrix acc = CMatrix::Zero(chi_l, chi_r);
        for (int qr = 0; qr <= n; ++qr) {
          const cplx g = block(pr, qr);
          if (g == cplx{0.0, 0.0}) continue;
          acc += g * pair[static_cast<std::size_t>(n - qr)][static_cast<std::size_t>(qr)];
        }
        theta[static_cast<std::size_t>(n - pr)][static_cast<std::size_t>(pr)] = std::move(acc);
      }
    }
    auto theta_at = [&](int pl, Eigen::Index a, int pr, Eigen::Index b) -> cplx {
      if (pl + pr >= d) return 0.0;
      return theta[static_cast<std::size_t>(pl)][static_cast<std::size_t>(pr)](a, b);
    };

    // Rows (pl, a), columns (pr, b), grouped by the boson number right of the middle bond.
    struct Index2 {
      int p;
      Eigen::Index k;
    };
    std::vector<int> sector_labels;
    std::vector<std::vector<Index2>> rows_of;
    std::vector<std::vector<Index2>> cols_of;
    auto sector_slot = [&](int q) {
      auto it = std::find(sector_labels.begin(), sector_labels.end(), q);
      if (it != sector_labels.end()) return static_cast<std::size_t>(it - sector_labels.begin());
      sector_labels.push_back(q);
      rows_of.emplace_back();
      cols_of.emplace_back();
      return sector_labels.size() - 1;
    };
    const auto& q_left = charges_[si];
    const auto& q_right = charges_[si + 2];
    if (sectors) {
      for (int pl = 0; pl < d; ++pl) {
        for (Eigen::Index a = 0; a < chi_l; ++a) {
          const int q = q_left[static_cast<std::size_t>(a)] - pl;
          if (q < 0) continue;
          rows_of[sector_slot(q)].push_back({pl, a});
        }
      }
      for (int pr = 0; pr < d; ++pr) {
        for (Eigen::Index b = 0; b < chi_r; ++b) {
          const int q = q_right[static_cast<std::size_t>(b)] + pr;
          if (q > n_bosons_) continue;
          cols_of[sector_slot(q)].push_back({pr, b});
        }
      }
      std::vector<std::size_t> order(sector_labels.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sector_labels[x] < sector_labels[y]; });
      std::vector<int> labels;
      std::vector<std::vector<Index2>> rows;
      std::vector<std::vector<Index2>> cols;
      for (std::size_t o : order) {
        labels.push_back(sector_labels[o]);
        rows.push_back(std::move(rows_of[o]));
        cols.push_back(std::move(cols_of[o]));
      }
      sector_labels = std::move(labels);
      rows_of = std::move(rows);
      cols_of = std::move(cols);
    } else {
      sector_labels.push_back(-1);
      rows_of.emplace_back();
      cols_of.emplace_back();
      for (int pl = 0; pl < d; ++pl)
        for (Eigen::Index a = 0; a < chi_l; ++a) rows_of[0].push_back({pl, a});
      for (int pr = 0; pr < d; ++pr)
        for (Eigen::Index b = 0; b < chi_r; ++b) cols_of[0].push_back({pr, b});
    }

    // Blocks of theta (unweighted) and their SVDs with the left Schmidt weights.
    const std::size_t n_blocks = sector_labels.size();
    std::vector<CMatrix> raw(n_blocks);
    std::vector<Svd> svds(n_blocks);
    std::vector<Triplet> triplets;
    for (std::size_t s = 0; s < n_blocks; ++s) {
      const auto& rs = rows_of[s];
      const auto& cs = cols_of[s];
      if (rs.empty() || cs.empty()) continue;
      CMatrix block(static_cast<Eigen::Index>(rs.size()), static_cast<Eigen::Index>(cs.size()));
      CMatrix weighted(block.rows(), block.cols());
      for (Eigen::Index c = 0; c < block.cols(); ++c) {
        const Index2 col = cs[static_cast<std::size_t>(c)];
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const Index2 row = rs[static_cast<std::size_t>(r)];
          block(r, c) = theta_at(row.p, row.k, col.p, col.k);
          weighted(r, c) = lam_left[row.k] * block(r, c);
        }
      }
      svds[s] = jacobi_svd(weighted, 0.0);
      raw[s] = std::move(block);
      for (Eigen::Index k = 0; k < svds[s].s.size(); ++k) {
        triplets.push_back(Triplet{svds[s].s[k], sector_labels[s], s, k});
      }
    }
    if (sectors) {
      // weight of amplitudes whose row and column sectors disagree
      double leak = 0.0;
      for (int pl = 0; pl < d; ++pl) {
        for (int pr = 0; pl + pr < d; ++pr) {
          const CMatrix& t = theta[static_cast<std::size_t>(pl)][static_cast<std::size_t>(pr)];
          for (Eigen::Index b = 0; b < chi_r; ++b) {
            for (Eigen::Index a = 0; a < chi_l; ++a) {
              if (q_left[static_cast<std::size_t>(a)] - pl == q_right[static_cast<std::size_t>(b)] + pr) continue;
              leak += std::norm(lam_left[a] * t(a, b));
            }
          }
        }
      }
      last_charge_leak_ = std::sqrt(leak);
    } else {
      last_charge_leak_ = 0.0;
    }

    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& x, const Triplet& y) { return x.value > y.value; });
    if (triplets.empty() || triplets.front().value <= 0.0) throw NumericalFailure("apply_two_site: state vanished");
    const double smax = triplets.front().value;
    double total_weight = 0.0;
    for (const Triplet& t : triplets) total_weight += t.value * t.value;
    std::size_t keep = 0;
    while (keep < triplets.size() && triplets[keep].value >= options_.zero_threshold * smax) ++keep;
    if (options_.chi_cap != kUnboundedChi) keep = std::min(keep, options_.chi_cap);
    triplets.resize(keep);
    double kept_weight = 0.0;
    for (const Triplet& t : triplets) kept_weight += t.value * t.value;
    last_norm_deviation_ = std::abs(1.0 - total_weight);
    discarded_weight_ += std::max(0.0, total_weight - kept_weight) / total_weight;
    const double rescale = 1.0 / std::sqrt(kept_weight);

    // New tensors: B_{i+1} = V^dag, B_i = theta V (unweighted), lambda = s.
    const auto chi_m = static_cast<Eigen::Index>(keep);
    std::vector<CMatrix> new_left(static_cast<std::size_t>(d), CMatrix::Zero(chi_l, chi_m));
    std::vector<CMatrix> new_right(static_cast<std::size_t>(d), CMatrix::Zero(chi_m, chi_r));
    RVector new_lambda(chi_m);
    std::vector<int> new_charges(keep, -1);
    for (Eigen::Index m = 0; m < chi_m; ++m) {
      const Triplet& t = triplets[static_cast<std::size_t>(m)];
      const Svd& svd = svds[t.block];
      const auto& rs = rows_of[t.block];
      const auto& cs = cols_of[t.block];
      new_lambda[m] = t.value * rescale;
      new_charges[static_cast<std::size_t>(m)] = t.charge;
      const CVector v = svd.v.col(t.column);
      for (Eigen::Index c = 0; c < v.size(); ++c) {
        const Index2 col = cs[static_cast<std::size_t>(c)];
        new_right[static_cast<std::size_t>(col.p)](m, col.k) = std::conj(v[c]);
      }
      const CVector u = raw[t.block] * v * rescale;
      for (Eigen::Index r = 0; r < u.size(); ++r) {
        const Index2 row = rs[static_cast<std::size_t>(r)];
        new_left[static_cast<std::size_t>(row.p)](row.k, m) = u[r];
      }
    }
    tensors_[si] = std::move(new_left);
    tensors_[si + 1] = std::move(new_right);
    lambda_[si + 1] = std::move(new_lambda);
    charges_[si + 1] = sectors ? std::move(new_charges) : std::vector<int>{};
  }

  int n_sites_;
  int n_bosons_;
  MpsOptions options_;
  std::vector<std::vector<CMatrix>> tensors_;
  std::vector<RVector> lambda_;
  std::vector<std::vector<int>> charges_;
  double discarded_weight_ = 0.0;
  double last_norm_deviation_ = 0.0;
  double last_charge_leak_ = 0.0;
};

inline MpsState mps_from_fock(const std::vector<int>& occupations, int n_bosons, MpsOptions options = {}) {
  return MpsState(occupations, n_bosons, options);
}

/// -sum lambda^2 log lambda^2 on bond n (natural log).
inline double entropy(const MpsState& state, int bond) {
  double s = 0.0;
  for (double l : state.schmidt_values(bond)) {
    const double w = l * l;
    if (w > 0.0) s -= w * std::log(w);
  }
  return s;
}

/// Squared Schmidt values of bond n, descending. For n = 1 these are the
/// eigenvalues of the reduced density matrix of site 1.
inline std::vector<double> schmidt_spectrum(const MpsState& state, int bond) {
  std::vector<double> w;
  for (double l : state.schmidt_values(bond)) w.push_back(l * l);
  std::sort(w.begin(), w.end(), std::greater<>());
  return w;
}

/// Mean occupation of a site from the canonical form.
inline double local_occupation(const MpsState& state, int site) {
  const int i = state.num_sites() - site;
  const RVector& lam = state.storage_lambda(i);
  double n = 0.0;
  for (int p = 1; p < state.local_dim(); ++p) {
    n += p * (lam.asDiagonal() * state.storage_tensor(i)[static_cast<std::size_t>(p)]).squaredNorm();
  }
  return n;
}

/// <a|b> by transfer-matrix contraction.
inline cplx overlap(const MpsState& a, const MpsState& b) {
  if (a.num_sites() != b.num_sites() || a.num_bosons() != b.num_bosons()) {
    throw DimensionMismatch("overlap: MPS dimensions differ");
  }
  CMatrix env = CMatrix::Ones(1, 1);
  for (int i = 0; i < a.num_sites(); ++i) {
    const auto& ta = a.storage_tensor(i);
    const auto& tb = b.storage_tensor(i);
    CMatrix next = CMatrix::Zero(ta.front().cols(), tb.front().cols());
    for (int p = 0; p < a.local_dim(); ++p) {
      next += ta[static_cast<std::size_t>(p)].adjoint() * env * tb[static_cast<std::size_t>(p)];
    }
    env = std::move(next);
  }
  return env(0, 0);
}

/// Expand the MPS in the Fock basis of the oracle.
inline DenseState to_dense(const MpsState& state, BasisPtr basis) {
  if (basis->num_sites() != state.num_sites() || basis->num_bosons() != state.num_bosons()) {
    throw DimensionMismatch("to_dense: basis does not match the MPS");
  }
  const int n = state.num_sites();
  DenseState out{basis, CVector::Zero(static_cast<Eigen::Index>(basis->size()))};
  std::vector<int> occ(static_cast<std::size_t>(n), 0);
  // Depth-first over storage positions; row vector carries the partial product.
  auto visit = [&](auto&& self, int i, int remaining, const CMatrix& row) -> void {
    const int site = n - i;
    const auto& t = state.storage_tensor(i);
    if (i == n - 1) {
      if (remaining >= state.local_dim()) return;
      occ[static_cast<std::size_t>(site - 1)] = remaining;
      const cplx amp = (row * t[static_cast<std::size_t>(remaining)])(0, 0);
      out.amplitudes[static_cast<Eigen::Index>(basis->index_of(occ))] = amp;
      return;
    }
    for (int p = remaining; p >= 0; --p) {
      const CMatrix next = row * t[static_cast<std::size_t>(p)];
      if (next.cwiseAbs().maxCoeff() == 0.0) continue;
      occ[static_cast<std::size_t>(site - 1)] = p;
      self(self, i + 1, remaining - p, next);
    }
    occ[static_cast<std::size_t>(site - 1)] = 0;
  };
  visit(visit, 0, state.num_bosons(), CMatrix::Ones(1, 1));
  return out;
}

inline DenseState to_dense(const MpsState& state, std::uint64_t budget = kDefaultBasisBudget) {
  return to_dense(state, enumerate_basis(state.num_sites(), state.num_bosons(), budget));
}

inline cplx overlap(const MpsState& a, const DenseState& b) { return overlap(to_dense(a, b.basis), b); }
inline cplx overlap(const DenseState& a, const MpsState& b) { return overlap(a, to_dense(b, a.basis)); }

}  // namespace bosefold
