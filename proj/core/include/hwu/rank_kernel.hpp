#pragma once

#include <span>

#include "hwu/types.hpp"

namespace hwu {

/// Phenotype ranks with ties replaced by their mid-rank.
struct RankVector {
  Vector ranks;
  /// Set when every phenotype value is identical (all ranks equal).
  bool degenerate = false;
};

/// Adjustment covariates: an intercept column followed by p user columns.
///
/// The constructor checks full column rank and caches an orthonormal basis
/// of the column span, so projections onto span(Z) never form the n x n hat
/// matrix explicitly.
class CovariateMatrix {
 public:
  /// Intercept-only design for n subjects.
  static CovariateMatrix intercept_only(Index n);

  /// Prepends an intercept column to `covariates` (n x p, p may be 0).
  static CovariateMatrix with_intercept(const Matrix& covariates);

  Index rows() const { return design_.rows(); }
  Index cols() const { return design_.cols(); }
  /// Number of non-intercept covariates.
  Index p() const { return design_.cols() - 1; }

  /// n x (p+1) design including the intercept column.
  const Matrix& design() const { return design_; }
  /// n x (p+1) orthonormal basis Q of span(Z); the hat matrix is Q Q'.
  const Matrix& basis() const { return basis_; }

  /// P v
  Vector project(const Vector& v) const;
  /// (I - P) v
  Vector residualize(const Vector& v) const;

  /// Returns the same design with rows reordered: row i of the result is
  /// row order[i] of this matrix.
  CovariateMatrix permuted(std::span<const Index> order) const;

 private:
  explicit CovariateMatrix(Matrix design);

  Matrix design_;
  Matrix basis_;
};

/// Residualized, variance-normalized rank scores.
struct StandardizedScores {
  Vector scores;
  /// n - p - 1, the divisor used for the rank variance.
  Index dof_used = 0;
};

RankVector average_ranks(std::span<const double> y);
RankVector average_ranks(const Vector& y);

StandardizedScores standardize_ranks(const RankVector& ranks,
                                     const CovariateMatrix& z);

/// S_ij = s_i * s_j, the cross-product rank kernel.
double phenotype_similarity(const StandardizedScores& s, Index i, Index j);

/// Convenience: rank then standardize.
StandardizedScores rank_scores(const Vector& y, const CovariateMatrix& z);

}  // namespace hwu
