#include "hwu/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "davies.hpp"
#include "hwu/errors.hpp"

namespace hwu {

std::string_view to_string(PMethod method) noexcept {
  switch (method) {
    case PMethod::davies: return "davies";
    case PMethod::moment_match: return "moment_match";
    case PMethod::permutation: return "permutation";
    case PMethod::analytic: return "analytic";
  }
  return "unknown";
}

ChiSquareMixture::ChiSquareMixture(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.empty()) throw Error(ErrorCode::invalid_input, "mixture has no components");
  bool any_nonzero = false;
  for (double l : lambdas_) {
    if (!std::isfinite(l)) throw Error(ErrorCode::invalid_input, "non-finite mixture weight");
    any_nonzero = any_nonzero || l != 0.0;
  }
  if (!any_nonzero) throw Error(ErrorCode::invalid_input, "all mixture weights are zero");
  std::sort(lambdas_.begin(), lambdas_.end(), std::greater<>());
}

double ChiSquareMixture::mean() const {
  return std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0);
}

double ChiSquareMixture::variance() const {
  double v = 0.0;
  for (double l : lambdas_) v += 2.0 * l * l;
  return v;
}

ChiSquareMixture ChiSquareMixture::scaled(double c) const {
  std::vector<double> out(lambdas_);
  for (double& l : out) l *= c;
  return ChiSquareMixture(std::move(out));
}

std::vector<double> sym_eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::invalid_input, "matrix must be square");
  if (!m.allFinite()) throw Error(ErrorCode::invalid_input, "matrix has non-finite entries");
  if (m.rows() == 0) return {};
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::invalid_input, "symmetric eigensolver did not converge");
  }
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<double> projected_eigenvalues(const Matrix& a, const CovariateMatrix& z) {
  const Index n = a.rows();
  if (a.cols() != n || z.rows() != n) {
    throw Error(ErrorCode::invalid_input, "matrix and covariate dimensions differ");
  }

  std::vector<Index> support;
  for (Index i = 0; i < n; ++i) {
    if ((a.col(i).array() != 0.0).any()) support.push_back(i);
  }
  const auto m = static_cast<Index>(support.size());
  if (m == 0) return {};

  Matrix core(m, m);
  Matrix basis(m, z.cols());
  for (Index c = 0; c < m; ++c) {
    basis.row(c) = z.basis().row(support[c]);
    for (Index r = 0; r < m; ++r) core(r, c) = a(support[r], support[c]);
  }

  // With E selecting the support rows, the nonzero spectrum of
  // (I-P) E A_c E' (I-P) equals that of M^{1/2} A_c M^{1/2}, where
  // M = E'(I-P)E = I - B B' and B = E'Q. From the thin SVD B = U S V',
  // M^{1/2} = I - U D U' with D = 1 - sqrt(1 - S^2).
  Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU);
  const Matrix& u = svd.matrixU();
  Vector d(svd.singularValues().size());
  for (Index k = 0; k < d.size(); ++k) {
    const double s2 = std::min(1.0, svd.singularValues()[k] * svd.singularValues()[k]);
    d[k] = 1.0 - std::sqrt(1.0 - s2);
  }
  const Matrix ud = u * d.asDiagonal();  // m x q
  const Matrix au = core * u;            // m x q
  const Matrix uau = u.transpose() * au; // q x q
  Matrix h = core - ud * au.transpose() - au * ud.transpose() +
             ud * uau * ud.transpose();
  h = 0.5 * (h + h.transpose()).eval();

  std::vector<double> eig = sym_eigenvalues(h);
  double largest = 0.0;
  for (double l : eig) largest = std::max(largest, std::abs(l));
  std::vector<double> kept;
  kept.reserve(eig.size());
  for (double l : eig) {
    if (std::abs(l) >= 1e-10 * largest && l != 0.0) kept.push_back(l);
  }
  return kept;
}

ChiSquareMixture null_mixture(const WeightMatrix& w, const CovariateMatrix& z) {
  std::vector<double> eig = projected_eigenvalues(w.entries(), z);
  if (eig.empty()) {
    throw Error(ErrorCode::degenerate_weight, "projected weight matrix has no nonzero eigenvalues");
  }
  return ChiSquareMixture(std::move(eig));
}

namespace {

double clamp_p(double p) { return std::clamp(p, kMinPValue, 1.0); }

struct RawTail {
  double p;
  int fault;
};

RawTail davies_raw(const ChiSquareMixture& mix, double q, DaviesOptions options) {
  const auto res = detail::davies_cdf(mix.lambdas(), q, options.accuracy, options.term_limit);
  return RawTail{1.0 - res.cdf, res.fault};
}

}  // namespace

PValue davies_pvalue(const ChiSquareMixture& mix, double q, DaviesOptions options) {
  const RawTail raw = davies_raw(mix, q, options);
  return PValue{clamp_p(raw.p), PMethod::davies, raw.fault};
}

PValue moment_match_pvalue(const ChiSquareMixture& mix, double q) {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (double l : mix.lambdas()) {
    s1 += l;
    s2 += l * l;
    s3 += l * l * l;
  }
  if (!(s2 > 0.0)) throw Error(ErrorCode::degenerate_weight, "mixture has zero variance");

  // cumulants: k1 = s1, k2 = 2 s2, k3 = 8 s3; a chi2_d scaled by a has
  // k2 = 2 a^2 d and k3 = 8 a^3 d, giving a = s3/s2 and d = s2^3/s3^2
  double p = 0.0;
  const double rel_skew = std::abs(s3) / std::pow(s2, 1.5);
  if (rel_skew < 1e-12) {
    const boost::math::normal_distribution<double> normal(s1, std::sqrt(2.0 * s2));
    p = boost::math::cdf(boost::math::complement(normal, q));
  } else {
    const double a = std::abs(s3) / s2;
    const double dof = s2 * s2 * s2 / (s3 * s3);
    const boost::math::chi_squared_distribution<double> chi(dof);
    if (s3 > 0.0) {
      const double x = (q - (s1 - a * dof)) / a;
      p = x <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(chi, x));
    } else {
      // reflected: Q = -(a chi2_d) + shift
      const double shift = s1 + a * dof;
      const double x = (shift - q) / a;
      p = x <= 0.0 ? 0.0 : boost::math::cdf(chi, x);
    }
  }
  return PValue{clamp_p(p), PMethod::moment_match, fault_none};
}

PValue mixture_pvalue(const ChiSquareMixture& mix, double q) {
  auto usable = [](const RawTail& r) {
    return r.fault == fault_none && r.p >= -1e-6 && r.p <= 1.0 + 1e-6;
  };
  const RawTail coarse = davies_raw(mix, q, DaviesOptions{});
  if (usable(coarse) && coarse.p > kRefineBelow) {
    return PValue{clamp_p(coarse.p), PMethod::davies, fault_none};
  }
  // small tails need an absolute accuracy well below the p-value itself
  const RawTail fine = davies_raw(mix, q, DaviesOptions{1e-9, 1000000});
  if (usable(fine)) return PValue{clamp_p(fine.p), PMethod::davies, fault_none};
  if (usable(coarse)) return PValue{clamp_p(coarse.p), PMethod::davies, fault_none};
  PValue mm = moment_match_pvalue(mix, q);
  mm.fault = fine.fault != fault_none ? fine.fault : fault_accuracy;
  return mm;
}

}  // namespace hwu
