#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bosefold/errors.hpp"

namespace bosefold {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Largest entry modulus of A - B.
template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("max_abs_diff: shape mismatch");
  }
  return (a - b).cwiseAbs().maxCoeff();
}

inline double off_diagonal_norm(const CMatrix& a) {
  double off = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) off += std::norm(a(i, j));
    }
  }
  return std::sqrt(off);
}

struct HermitianEigen {
  RVector values;   // ascending
  CMatrix vectors;  // column l belongs to values[l]
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Sweeps run in fixed (p, q) row-major order until the off-diagonal Frobenius
/// norm drops below tol * max(1, |A|_F). Eigenpairs are returned in ascending
/// order (stable on ties) and each eigenvector is rephased so that its first
/// component of largest modulus is real and positive.
inline HermitianEigen jacobi_eigh(const CMatrix& input, double tol = 1e-13, int max_sweeps = 100) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw DimensionMismatch("jacobi_eigh: matrix is not square");
  CMatrix a = input;
  CMatrix v = CMatrix::Identity(n, n);
  const double scale = std::max(1.0, a.norm());

  int sweep = 0;
  while (off_diagonal_norm(a) >= tol * scale) {
    if (++sweep > max_sweeps) throw NumericalFailure("jacobi_eigh: no convergence");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        // Rephase column q so the pivot is real, then rotate as in the real case.
        const cplx phase = apq / r;  // e^{i alpha}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double zeta = (aqq - app) / (2.0 * r);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = [[c, s], [-s conj(phase), c conj(phase)]] on the (p, q) plane.
        const cplx gpp = c;
        const cplx gpq = s;
        const cplx gqp = -s * std::conj(phase);
        const cplx gqq = c * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });

  HermitianEigen out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index l = 0; l < n; ++l) {
    const Eigen::Index src = order[static_cast<std::size_t>(l)];
    out.values[l] = a(src, src).real();
    CVector col = v.col(src);
    const double biggest = col.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(col[k]) >= biggest * (1.0 - 1e-10)) {
        col *= std::conj(col[k]) / std::abs(col[k]);
        col[k] = std::abs(col[k]);
        break;
      }
    }
    out.vectors.col(l) = col;
  }
  return out;
}

/// Thin singular value decomposition a = u * diag(s) * v^H, keeping only the
/// numerically nonzero singular values (s >= rel_zero * s_max), descending.
struct Svd {
  CMatrix u;
  RVector s;
  CMatrix v;
};

namespace detail {

// One-sided (Hestenes) Jacobi on the columns of a tall matrix.
inline Svd hestenes_tall(CMatrix w, double rel_zero) {
  const Eigen::Index m = w.rows();
  const Eigen::Index n = w.cols();
  CMatrix v = CMatrix::Identity(n, n);
  constexpr double eps = 1e-15;
  constexpr int max_sweeps = 80;

  RVector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms[j] = w.col(j).squaredNorm();

  for (int sweep = 0;; ++sweep) {
    if (sweep >= max_sweeps) throw NumericalFailure("jacobi_svd: no convergence");
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = norms[p];
        const double beta = norms[q];
        if (alpha == 0.0 || beta == 0.0) continue;
        const cplx gamma = w.col(p).dot(w.col(q));  // u_p^H u_q
        const double g = std::abs(gamma);
        if (g <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const cplx ph = std::conj(gamma) / g;  // e^{-i phi}
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        {
          CVector up = w.col(p);
          CVector uq = w.col(q) * ph;
          w.col(p) = c * up - s * uq;
          w.col(q) = s * up + c * uq;
        }
        {
          CVector vp = v.col(p);
          CVector vq = v.col(q) * ph;
          v.col(p) = c * vp - s * vq;
          v.col(q) = s * vp + c * vq;
        }
        norms[p] = w.col(p).squaredNorm();
        norms[q] = w.col(q).squaredNorm();
      }
    }
    if (!rotated) break;
  }

  RVector sv(n);
  for (Eigen::Index j = 0; j < n; ++j) sv[j] = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return sv[x] > sv[y]; });

  const double smax = n > 0 ? sv[order.front()] : 0.0;
  Eigen::Index rank = 0;
  while (rank < n) {
    const double value = sv[order[static_cast<std::size_t>(rank)]];
    if (value <= 0.0 || value < rel_zero * smax) break;
    ++rank;
  }

  Svd out{CMatrix(m, rank), RVector(rank), CMatrix(n, rank)};
  for (Eigen::Index k = 0; k < rank; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.s[k] = sv[src];
    out.u.col(k) = w.col(src) / sv[src];
    out.v.col(k) = v.col(src);
  }
  return out;
}

}  // namespace detail

/// One-sided Jacobi SVD. Tall inputs are first reduced with a Householder QR so
/// the Jacobi sweeps act on a square triangular factor.
inline Svd jacobi_svd(const CMatrix& a, double rel_zero = 1e-14) {
  if (a.rows() == 0 || a.cols() == 0) return Svd{CMatrix(a.rows(), 0), RVector(0), CMatrix(a.cols(), 0)};
  if (a.rows() < a.cols()) {
    Svd t = jacobi_svd(a.adjoint(), rel_zero);
    return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  if (a.rows() > 2 * a.cols()) {
    Eigen::HouseholderQR<CMatrix> qr(a);
    const Eigen::Index n = a.cols();
    CMatrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Svd inner = detail::hestenes_tall(std::move(r), rel_zero);
    CMatrix q = qr.householderQ() * CMatrix::Identity(a.rows(), n);
    return Svd{q * inner.u, std::move(inner.s), std::move(inner.v)};
  }
  return detail::hestenes_tall(a, rel_zero);
}

}  // namespace bosefold
