#include "hwu/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "hwu/errors.hpp"

namespace hwu {

std::string_view to_string(GlmFamily family) noexcept {
  return family == GlmFamily::linear ? "linear" : "logistic";
}

namespace {

constexpr int kMaxIterations = 50;
constexpr double kDevianceTol = 1e-8;

void check_rank(const Matrix& design) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorCode::singular_fit, "design matrix is rank deficient");
  }
}

double binomial_deviance(const Vector& y, const Vector& mu) {
  double dev = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double m = std::clamp(mu[i], 1e-300, 1.0 - 1e-16);
    dev -= 2.0 * (y[i] > 0.5 ? std::log(m) : std::log1p(-m));
  }
  return dev;
}

GlmFit fit_linear(const Vector& y, const Matrix& x) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  GlmFit fit;
  fit.coefficients = qr.solve(y);
  fit.rss = (y - x * fit.coefficients).squaredNorm();
  fit.deviance = fit.rss;
  fit.iterations = 1;
  return fit;
}

GlmFit fit_logistic(const Vector& y, const Matrix& x) {
  const Index n = y.size();
  for (Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error(ErrorCode::invalid_input, "logistic family requires a 0/1 phenotype");
    }
  }
  GlmFit fit;
  fit.coefficients = Vector::Zero(x.cols());
  Vector eta = Vector::Zero(n);
  Vector mu = Vector::Constant(n, 0.5);
  double deviance = binomial_deviance(y, mu);

  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    const Vector var = mu.array() * (1.0 - mu.array());
    const Vector sw = var.array().sqrt();
    const Vector work = eta.array() + (y - mu).array() / var.array();
    const Matrix xw = sw.asDiagonal() * x;
    const Vector zw = sw.cwiseProduct(work);
    fit.coefficients = xw.colPivHouseholderQr().solve(zw);
    eta = x * fit.coefficients;
    if (eta.cwiseAbs().maxCoeff() > 30.0) {
      throw Error(ErrorCode::non_converged,
                  "logistic fit diverging (|eta| > 30 at iteration " + std::to_string(iter) +
                      "); likely separation");
    }
    mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const double next = binomial_deviance(y, mu);
    fit.iterations = iter;
    if (std::abs(next - deviance) < kDevianceTol) {
      fit.deviance = next;
      return fit;
    }
    deviance = next;
  }
  throw Error(ErrorCode::non_converged,
              "logistic fit did not converge in " + std::to_string(kMaxIterations) + " iterations");
}

}  // namespace

GlmFit glm_fit(const Vector& y, const Matrix& design, GlmFamily family) {
  if (y.size() != design.rows()) {
    throw Error(ErrorCode::invalid_input, "phenotype and design lengths differ");
  }
  if (!y.allFinite()) throw Error(ErrorCode::invalid_input, "phenotype has non-finite values");
  check_rank(design);
  return family == GlmFamily::linear ? fit_linear(y, design) : fit_logistic(y, design);
}

GlmLrt glm_lrt(const Vector& y, const Vector& g, const CovariateMatrix& z, GlmFamily family) {
  const Index n = y.size();
  if (g.size() != n || z.rows() != n) {
    throw Error(ErrorCode::invalid_input, "phenotype, genotype and covariate lengths differ");
  }
  GlmLrt out;
  out.null_fit = glm_fit(y, z.design(), family);
  if (g.maxCoeff() == g.minCoeff()) {
    out.full_fit = out.null_fit;
    out.statistic = 0.0;
    out.p = PValue{1.0, PMethod::analytic, fault_none};
    return out;
  }
  Matrix full(n, z.cols() + 1);
  full.leftCols(z.cols()) = z.design();
  full.col(z.cols()) = g;
  out.full_fit = glm_fit(y, full, family);

  double stat = 0.0;
  if (family == GlmFamily::linear) {
    if (out.full_fit.rss <= 0.0) {
      throw Error(ErrorCode::singular_fit, "full model fits the phenotype exactly");
    }
    stat = static_cast<double>(n) * std::log(out.null_fit.rss / out.full_fit.rss);
  } else {
    stat = out.null_fit.deviance - out.full_fit.deviance;
  }
  out.statistic = std::max(0.0, stat);
  const boost::math::chi_squared_distribution<double> chi1(1.0);
  const double p = boost::math::cdf(boost::math::complement(chi1, out.statistic));
  out.p = PValue{std::clamp(p, kMinPValue, 1.0), PMethod::analytic, fault_none};
  return out;
}

VcScoreResult vc_score_test(const Vector& y, const Vector& g, const CovariateMatrix& z,
                            const KappaMatrix& k) {
  const Index n = y.size();
  if (g.size() != n || z.rows() != n || k.size() != n) {
    throw Error(ErrorCode::invalid_input, "dimensions of y, g, Z and K differ");
  }
  if (!y.allFinite()) throw Error(ErrorCode::invalid_input, "phenotype has non-finite values");
  const Vector resid = z.residualize(y);
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n - z.cols());
  if (!(sigma2 > 0.0)) {
    throw Error(ErrorCode::degenerate_phenotype, "null residual variance is zero");
  }
  const Vector ytilde = resid / std::sqrt(sigma2);

  VcScoreResult out;
  if (g.cwiseAbs().maxCoeff() == 0.0) {
    out.p = PValue{1.0, PMethod::analytic, fault_none};
    return out;
  }
  const Vector gy = g.cwiseProduct(ytilde);
  out.statistic = gy.dot(k.entries * gy);

  const Matrix gkg = g.asDiagonal() * k.entries * g.asDiagonal();
  std::vector<double> eig = projected_eigenvalues(gkg, z);
  if (eig.empty()) {
    throw Error(ErrorCode::degenerate_weight, "G K G has no nonzero projected eigenvalues");
  }
  out.p = mixture_pvalue(ChiSquareMixture(std::move(eig)), out.statistic);
  return out;
}

}  // namespace hwu
