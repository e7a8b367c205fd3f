#pragma once

#include <string_view>

#include "hwu/quadform.hpp"
#include "hwu/rank_kernel.hpp"
#include "hwu/weights.hpp"

namespace hwu {

enum class GlmFamily { linear, logistic };
std::string_view to_string(GlmFamily family) noexcept;

struct GlmFit {
  Vector coefficients;
  /// -2 log-likelihood up to a family constant: RSS-based for linear
  /// models, binomial deviance for logistic ones.
  double deviance = 0.0;
  double rss = 0.0;
  int iterations = 0;
};

struct GlmLrt {
  PValue p;
  double statistic = 0.0;
  GlmFit null_fit;
  GlmFit full_fit;
};

/// Fits y on the design X (intercept already included).
/// Logistic fits use iteratively reweighted least squares, stopping when the
/// deviance changes by less than 1e-8 (at most 50 iterations).
GlmFit glm_fit(const Vector& y, const Matrix& design, GlmFamily family);

/// Likelihood-ratio test of the genotype term, df = 1.
/// A genotype vector with no variation carries no information and yields
/// p = 1; genotype collinear with Z otherwise raises singular_fit.
GlmLrt glm_lrt(const Vector& y, const Vector& g, const CovariateMatrix& z, GlmFamily family);

struct VcScoreResult {
  double statistic = 0.0;
  PValue p;
};

/// Variance-component score test T = Y~' G K G Y~ with Y~ the standardized
/// residuals of the Gaussian null fit on Z. The null is the chi-square
/// mixture with weights eig((I-P) G K G (I-P)).
VcScoreResult vc_score_test(const Vector& y, const Vector& g, const CovariateMatrix& z,
                            const KappaMatrix& k);

}  // namespace hwu
