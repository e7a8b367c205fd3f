#pragma once

#include <string_view>
#include <vector>

#include "hwu/rank_kernel.hpp"
#include "hwu/types.hpp"
#include "hwu/weights.hpp"

namespace hwu {

/// Coefficients of sum_s lambda_s * chi2_1 (central, one degree of freedom).
/// Stored sorted descending by value.
class ChiSquareMixture {
 public:
  /// Throws invalid_input if empty, non-finite or all zero.
  explicit ChiSquareMixture(std::vector<double> lambdas);

  const std::vector<double>& lambdas() const { return lambdas_; }
  std::size_t size() const { return lambdas_.size(); }

  double mean() const;
  double variance() const;
  ChiSquareMixture scaled(double c) const;

 private:
  std::vector<double> lambdas_;
};

/// analytic: a closed-form reference distribution (chi-square LRT, or a
/// statistic that is identically zero).
enum class PMethod { davies, moment_match, permutation, analytic };
std::string_view to_string(PMethod method) noexcept;

/// Davies fault codes; zero means no fault.
enum DaviesFault : int {
  fault_none = 0,
  fault_accuracy = 1,
  fault_roundoff = 2,
  fault_invalid = 3,
  fault_no_bounds = 4,
};

struct PValue {
  double value = 1.0;
  PMethod method = PMethod::davies;
  int fault = fault_none;
};

/// Smallest p-value ever reported.
inline constexpr double kMinPValue = 1e-16;

/// All eigenvalues of a symmetric matrix, descending. The input is
/// symmetrized as (M + M')/2 first.
std::vector<double> sym_eigenvalues(const Matrix& m);

/// Non-negligible eigenvalues of (I - P) A (I - P) for symmetric A, where P
/// projects onto span(Z). Rows and columns of A that are identically zero
/// are removed first; the reduction is exact because the dropped subjects
/// contribute only zero eigenvalues. Eigenvalues with |lambda| below
/// 1e-10 * max|lambda| are discarded. Returns an empty vector when nothing
/// survives.
std::vector<double> projected_eigenvalues(const Matrix& a, const CovariateMatrix& z);

/// Null distribution of U: eigenvalues of (I - P) W (I - P).
/// Throws degenerate_weight when every eigenvalue is negligible.
ChiSquareMixture null_mixture(const WeightMatrix& w, const CovariateMatrix& z);

struct DaviesOptions {
  double accuracy = 1e-6;
  int term_limit = 100000;
};

/// P(sum lambda_s chi2_1 > q) by characteristic-function inversion. The
/// result carries a fault code when the integration could not meet the
/// requested accuracy; callers decide whether to fall back.
PValue davies_pvalue(const ChiSquareMixture& mix, double q, DaviesOptions options = {});

/// Three-cumulant match to a shifted, scaled chi-square.
PValue moment_match_pvalue(const ChiSquareMixture& mix, double q);

/// Tails below this are recomputed by mixture_pvalue at accuracy 1e-9.
inline constexpr double kRefineBelow = 1e-3;

/// Davies at the default accuracy; tails below kRefineBelow (or faulted
/// runs) are redone at accuracy 1e-9 with a larger term budget. Falls back to
/// moment matching when no run succeeds within [0, 1] (1e-6 slack).
/// Clamped to [kMinPValue, 1].
PValue mixture_pvalue(const ChiSquareMixture& mix, double q);

}  // namespace hwu
