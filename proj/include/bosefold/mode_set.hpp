#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "bosefold/errors.hpp"
#include "bosefold/linalg.hpp"

namespace bosefold {

/// A product of non-diagonal creation modes acting on vacuum,
///
///   prod_q (sum_j c[j][q] a_j^dag)^{n_q} / sqrt(n_q!) |0>.
///
/// Rows of the coefficient matrix are sites (row 0 is site 1), columns are
/// modes. Modes with zero occupation are dropped at construction.
class ModeSet {
 public:
  static constexpr double kOrthonormalityTolerance = 1e-8;

  ModeSet() = default;

  ModeSet(CMatrix coefficients, std::vector<int> occupations) {
    if (coefficients.cols() != static_cast<Eigen::Index>(occupations.size())) {
      throw DimensionMismatch("ModeSet: " + std::to_string(coefficients.cols()) + " modes but " +
                              std::to_string(occupations.size()) + " occupations");
    }
    if (coefficients.rows() < 1) throw InvalidDimension("ModeSet: need at least one site");
    std::vector<Eigen::Index> kept;
    for (std::size_t q = 0; q < occupations.size(); ++q) {
      if (occupations[q] < 0) throw InvalidInput("ModeSet: negative occupation");
      if (occupations[q] > 0) kept.push_back(static_cast<Eigen::Index>(q));
    }
    coefficients_ = CMatrix(coefficients.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
      coefficients_.col(static_cast<Eigen::Index>(k)) = coefficients.col(kept[k]);
      occupations_.push_back(occupations[static_cast<std::size_t>(kept[k])]);
    }
    if (num_modes() > num_sites()) {
      throw InvalidDimension("ModeSet: " + std::to_string(num_modes()) + " occupied modes exceed " +
                             std::to_string(num_sites()) + " sites");
    }
    const double err = orthonormality_error();
    if (err > kOrthonormalityTolerance) {
      throw NonOrthonormalModes("ModeSet: mode columns are not orthonormal (max deviation " + std::to_string(err) +
                                "); non-orthonormal products need an auxiliary purification mode first");
    }
  }

  int num_sites() const { return static_cast<int>(coefficients_.rows()); }
  int num_modes() const { return static_cast<int>(coefficients_.cols()); }
  int num_bosons() const { return std::accumulate(occupations_.begin(), occupations_.end(), 0); }

  const CMatrix& coefficients() const { return coefficients_; }
  const std::vector<int>& occupations() const { return occupations_; }

  /// Coefficient of a_site^dag (site in 1..N) in mode (1..N').
  cplx coefficient(int site, int mode) const { return coefficients_(site - 1, mode - 1); }

  double orthonormality_error() const {
    const CMatrix gram = coefficients_.adjoint() * coefficients_;
    return max_abs_diff(gram, CMatrix::Identity(gram.rows(), gram.cols()));
  }

 private:
  CMatrix coefficients_;
  std::vector<int> occupations_;
};

/// One boson on each site: the unit coefficient matrix with all n_q = 1.
inline ModeSet one_boson_per_site(int n_sites) {
  return ModeSet(CMatrix::Identity(n_sites, n_sites), std::vector<int>(static_cast<std::size_t>(n_sites), 1));
}

}  // namespace bosefold
