#include "hwu/rank_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hwu/errors.hpp"

namespace hwu {

RankVector average_ranks(std::span<const double> y) {
  const auto n = static_cast<Index>(y.size());
  if (n < 3) {
    throw Error(ErrorCode::invalid_input,
                "at least 3 subjects are required, got " + std::to_string(n));
  }
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::invalid_input, "phenotype contains non-finite values");
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return y[a] < y[b]; });

  RankVector out;
  out.ranks.resize(n);
  Index groups = 0;
  for (Index start = 0; start < n;) {
    Index end = start;
    while (end + 1 < n && y[order[end + 1]] == y[order[start]]) ++end;
    // positions start+1 .. end+1 share their mean
    const double mid = 0.5 * static_cast<double>(start + end + 2);
    for (Index k = start; k <= end; ++k) out.ranks[order[k]] = mid;
    ++groups;
    start = end + 1;
  }
  out.degenerate = (groups == 1);
  return out;
}

RankVector average_ranks(const Vector& y) {
  return average_ranks(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

CovariateMatrix::CovariateMatrix(Matrix design) : design_(std::move(design)) {
  const Index n = design_.rows();
  const Index q = design_.cols();
  if (!design_.allFinite()) {
    throw Error(ErrorCode::invalid_input, "covariates contain non-finite values");
  }
  if (n <= q) {
    throw Error(ErrorCode::invalid_input,
                "need more subjects than covariate columns (n=" + std::to_string(n) +
                    ", columns=" + std::to_string(q) + ")");
  }
  Eigen::ColPivHouseholderQR<Matrix> pivoted(design_);
  pivoted.setThreshold(1e-10);
  if (pivoted.rank() < q) {
    throw Error(ErrorCode::singular_covariates, "covariate matrix is not of full column rank");
  }
  Eigen::HouseholderQR<Matrix> qr(design_);
  basis_ = qr.householderQ() * Matrix::Identity(n, q);
}

CovariateMatrix CovariateMatrix::intercept_only(Index n) {
  return CovariateMatrix(Matrix::Ones(n, 1));
}

CovariateMatrix CovariateMatrix::with_intercept(const Matrix& covariates) {
  Matrix design(covariates.rows(), covariates.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(covariates.cols()) = covariates;
  return CovariateMatrix(std::move(design));
}

Vector CovariateMatrix::project(const Vector& v) const {
  return basis_ * (basis_.transpose() * v);
}

Vector CovariateMatrix::residualize(const Vector& v) const { return v - project(v); }

CovariateMatrix CovariateMatrix::permuted(std::span<const Index> order) const {
  Matrix d(design_.rows(), design_.cols());
  for (Index i = 0; i < d.rows(); ++i) d.row(i) = design_.row(order[i]);
  return CovariateMatrix(std::move(d));
}

StandardizedScores standardize_ranks(const RankVector& ranks, const CovariateMatrix& z) {
  const Index n = ranks.ranks.size();
  if (z.rows() != n) {
    throw Error(ErrorCode::invalid_input, "covariate rows do not match phenotype length");
  }
  if (ranks.degenerate) {
    throw Error(ErrorCode::degenerate_phenotype, "phenotype has no variation");
  }
  const Vector resid = z.residualize(ranks.ranks);
  const Index dof = n - z.cols();
  const double ss = resid.squaredNorm();
  // relative test: an exact fit leaves only rounding noise
  if (!(ss > 1e-20 * ranks.ranks.squaredNorm())) {
    throw Error(ErrorCode::degenerate_phenotype,
                "rank residual variance is zero after covariate adjustment");
  }
  const double sigma = std::sqrt(ss / static_cast<double>(dof));
  return StandardizedScores{resid / sigma, dof};
}

double phenotype_similarity(const StandardizedScores& s, Index i, Index j) {
  const Index n = s.scores.size();
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw Error(ErrorCode::invalid_input, "subject index out of range");
  }
  return s.scores[i] * s.scores[j];
}

StandardizedScores rank_scores(const Vector& y, const CovariateMatrix& z) {
  return standardize_ranks(average_ranks(y), z);
}

}  // namespace hwu
