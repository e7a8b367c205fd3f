#include "hwu/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "hwu/errors.hpp"

namespace hwu {

std::string_view to_string(KappaKind kind) noexcept {
  switch (kind) {
    case KappaKind::euclidean: return "euclidean";
    case KappaKind::crossprod: return "crossprod";
    case KappaKind::ibs: return "ibs";
    case KappaKind::constant: return "constant";
    case KappaKind::precomputed: return "precomputed";
  }
  return "unknown";
}

std::string_view to_string(GsimKind kind) noexcept {
  switch (kind) {
    case GsimKind::crossprod: return "crossprod";
    case GsimKind::match: return "match";
    case GsimKind::multilocus: return "multilocus";
  }
  return "unknown";
}

std::string_view to_string(WeightMode mode) noexcept {
  switch (mode) {
    case WeightMode::hwu: return "hwu";
    case WeightMode::nhwu: return "nhwu";
    case WeightMode::phwu: return "phwu";
  }
  return "unknown";
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "hwu") return WeightMode::hwu;
  if (text == "nhwu") return WeightMode::nhwu;
  if (text == "phwu") return WeightMode::phwu;
  throw Error(ErrorCode::invalid_parameter, "unknown weight mode '" + std::string(text) + "'");
}

GsimKind parse_gsim_kind(std::string_view text) {
  if (text == "crossprod") return GsimKind::crossprod;
  if (text == "match") return GsimKind::match;
  if (text == "multilocus") return GsimKind::multilocus;
  throw Error(ErrorCode::invalid_parameter,
              "unknown genetic similarity '" + std::string(text) + "'");
}

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, max_abs(m));
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_square_symmetric(const Matrix& m, double rel_tol, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::invalid_input, std::string(what) + " must be square");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::invalid_input, std::string(what) + " contains non-finite entries");
  }
  if (!is_symmetric(m, rel_tol)) {
    throw Error(ErrorCode::invalid_input, std::string(what) + " is not symmetric");
  }
}

Matrix drop_rows_cols(const Matrix& m, const std::vector<Index>& dropped) {
  if (dropped.empty()) return m;
  std::vector<Index> keep;
  for (Index i = 0; i < m.rows(); ++i) {
    if (std::find(dropped.begin(), dropped.end(), i) == dropped.end()) keep.push_back(i);
  }
  Matrix out(static_cast<Index>(keep.size()), static_cast<Index>(keep.size()));
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = 0; b < keep.size(); ++b) out(a, b) = m(keep[a], keep[b]);
  }
  return out;
}

Matrix prepare_covariates(const Matrix& covariates, KappaOptions options,
                          std::vector<Index>& dropped) {
  if (covariates.rows() < 1 || covariates.cols() < 1) {
    throw Error(ErrorCode::invalid_input, "covariate matrix is empty");
  }
  if (!covariates.allFinite()) {
    throw Error(ErrorCode::invalid_input, "covariates contain non-finite values");
  }
  if (!options.standardize) return covariates;
  Matrix x = standardize_columns(covariates, &dropped);
  if (x.cols() == 0) {
    throw Error(ErrorCode::invalid_input, "every covariate column has zero variance");
  }
  return x;
}

}  // namespace

Matrix default_importance(Index dims) {
  if (dims < 1) throw Error(ErrorCode::invalid_parameter, "metric dimension must be >= 1");
  return Matrix::Identity(dims, dims) / static_cast<double>(dims);
}

Matrix importance_weights(const Vector& omega) {
  if ((omega.array() < 0.0).any()) {
    throw Error(ErrorCode::invalid_parameter, "importance weights must be non-negative");
  }
  return omega.asDiagonal();
}

Matrix inverse_correlation(const Matrix& covariates) {
  const Matrix x = standardize_columns(covariates);
  const Matrix corr = (x.transpose() * x) / static_cast<double>(x.rows());
  Eigen::LDLT<Matrix> ldlt(corr);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-12).all()) {
    throw Error(ErrorCode::invalid_parameter, "covariate correlation matrix is singular");
  }
  return ldlt.solve(Matrix::Identity(corr.rows(), corr.cols()));
}

Matrix standardize_columns(const Matrix& covariates, std::vector<Index>* dropped) {
  const Index n = covariates.rows();
  std::vector<Index> keep;
  Matrix scaled(n, covariates.cols());
  for (Index c = 0; c < covariates.cols(); ++c) {
    const double mean = covariates.col(c).mean();
    const Vector centered = covariates.col(c).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      if (dropped) dropped->push_back(c);
      std::cerr << "warning: covariate column " << c << " has zero variance; dropped\n";
      continue;
    }
    scaled.col(static_cast<Index>(keep.size())) = centered / sd;
    keep.push_back(c);
  }
  return scaled.leftCols(static_cast<Index>(keep.size()));
}

KappaMatrix kappa_euclidean(const Matrix& covariates, const Matrix& metric,
                            KappaOptions options) {
  KappaMatrix out;
  out.kind = KappaKind::euclidean;
  const Matrix x = prepare_covariates(covariates, options, out.dropped_columns);
  const Index d = x.cols();

  Matrix r;
  if (metric.size() == 0) {
    r = default_importance(d);
  } else {
    if (metric.rows() != covariates.cols() || metric.cols() != covariates.cols()) {
      throw Error(ErrorCode::invalid_parameter, "metric must be D x D");
    }
    require_square_symmetric(metric, 1e-10, "metric");
    r = drop_rows_cols(metric, out.dropped_columns);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r + r.transpose()), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, max_abs(r));
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
      throw Error(ErrorCode::invalid_parameter, "metric is not positive semidefinite");
    }
  }
  r = 0.5 * (r + r.transpose());

  const Matrix xr = x * r;
  Matrix gram = xr * x.transpose();
  gram = 0.5 * (gram + gram.transpose()).eval();
  const Vector self = gram.diagonal();
  const Index n = x.rows();
  out.entries.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double dist = std::max(0.0, self[i] + self[j] - 2.0 * gram(i, j));
      out.entries(i, j) = std::exp(-dist);
    }
    out.entries(j, j) = 1.0;
  }
  return out;
}

KappaMatrix kappa_crossprod(const Matrix& covariates, KappaOptions options) {
  KappaMatrix out;
  out.kind = KappaKind::crossprod;
  const Matrix x = prepare_covariates(covariates, options, out.dropped_columns);
  Matrix k = (x * x.transpose()) / static_cast<double>(x.cols());
  out.entries = 0.5 * (k + k.transpose());
  return out;
}

KappaMatrix kappa_ibs(const Matrix& dosages) {
  const Index n = dosages.rows();
  const Index q = dosages.cols();
  if (n < 1 || q < 1) throw Error(ErrorCode::invalid_input, "IBS needs at least one marker");
  Matrix ind[3];
  for (auto& m : ind) m = Matrix::Zero(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < q; ++c) {
      const double g = dosages(i, c);
      if (std::isnan(g)) {
        throw Error(ErrorCode::invalid_input, "IBS input has missing dosages; impute first");
      }
      if (g != 0.0 && g != 1.0 && g != 2.0) {
        throw Error(ErrorCode::invalid_input, "IBS dosages must be 0, 1 or 2");
      }
      ind[static_cast<int>(g)](i, c) = 1.0;
    }
  }
  // sum_q |g_qi - g_qj| as products of genotype-class indicators
  const Matrix m01 = ind[0] * ind[1].transpose();
  const Matrix m12 = ind[1] * ind[2].transpose();
  const Matrix m02 = ind[0] * ind[2].transpose();
  const Matrix dist =
      m01 + m01.transpose() + m12 + m12.transpose() + 2.0 * (m02 + m02.transpose());
  KappaMatrix out;
  out.kind = KappaKind::ibs;
  out.entries = Matrix::Ones(n, n) - dist / (2.0 * static_cast<double>(q));
  return out;
}

KappaMatrix kappa_constant(Index n, double value) {
  KappaMatrix out;
  out.kind = KappaKind::constant;
  out.entries = Matrix::Constant(n, n, value);
  return out;
}

KappaMatrix kappa_precomputed(Matrix entries) {
  require_square_symmetric(entries, 1e-10, "kappa matrix");
  KappaMatrix out;
  out.kind = KappaKind::precomputed;
  out.entries = 0.5 * (entries + entries.transpose());
  return out;
}

KappaMatrix load_kappa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open kappa file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      std::istringstream ts(tok);
      ts.imbue(std::locale::classic());
      double v = 0.0;
      if (!(ts >> v) || !ts.eof()) {
        throw Error(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) +
                                                ": bad number '" + tok + "'");
      }
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[i].size()) != n) {
      throw Error(ErrorCode::parse_error,
                  path.string() + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
    }
    for (Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return kappa_precomputed(std::move(m));
}

GeneticSimilarity::GeneticSimilarity(Matrix dosages, GsimKind kind)
    : dosages_(std::move(dosages)), kind_(kind) {
  if (dosages_.cols() < 1) throw Error(ErrorCode::invalid_input, "need at least one marker");
  if (!dosages_.allFinite()) {
    throw Error(ErrorCode::invalid_input, "dosages contain missing values; impute first");
  }
}

GeneticSimilarity GeneticSimilarity::single(const Vector& dosage, GsimKind kind) {
  return GeneticSimilarity(Matrix(dosage), kind);
}

double GeneticSimilarity::operator()(Index i, Index j) const {
  if (i < 0 || j < 0 || i >= subjects() || j >= subjects()) {
    throw Error(ErrorCode::invalid_input, "subject index out of range");
  }
  if (kind_ == GsimKind::match) {
    double s = 0.0;
    for (Index q = 0; q < markers(); ++q) s += dosages_(i, q) == dosages_(j, q) ? 1.0 : 0.0;
    return s;
  }
  return dosages_.row(i).dot(dosages_.row(j));
}

Matrix GeneticSimilarity::matrix() const {
  const Index n = subjects();
  if (kind_ != GsimKind::match) return dosages_ * dosages_.transpose();
  Matrix f = Matrix::Zero(n, n);
  for (Index q = 0; q < markers(); ++q) {
    for (Index j = 0; j < n; ++j) {
      const double gj = dosages_(j, q);
      for (Index i = 0; i < n; ++i) f(i, j) += dosages_(i, q) == gj ? 1.0 : 0.0;
    }
  }
  return f;
}

WeightMatrix::WeightMatrix(Matrix entries, WeightMode mode)
    : entries_(std::move(entries)), mode_(mode) {
  require_square_symmetric(entries_, 1e-12, "weight matrix");
  entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
  entries_.diagonal().setZero();
}

std::size_t impute_mean(std::span<double> dosage) {
  double sum = 0.0;
  std::size_t observed = 0;
  for (double g : dosage) {
    if (!std::isnan(g)) {
      sum += g;
      ++observed;
    }
  }
  const double fill = observed > 0 ? sum / static_cast<double>(observed) : 0.0;
  std::size_t imputed = 0;
  for (double& g : dosage) {
    if (std::isnan(g)) {
      g = fill;
      ++imputed;
    }
  }
  return imputed;
}

WeightMatrix compose_weight(const KappaMatrix& kappa, const GeneticSimilarity& gs,
                            WeightMode mode) {
  if (kappa.size() != gs.subjects()) {
    throw Error(ErrorCode::invalid_input, "kappa and genotype dimensions differ");
  }
  Matrix w = gs.matrix();
  const double scale = max_abs(w) * std::max(1.0, max_abs(kappa.entries));
  switch (mode) {
    case WeightMode::hwu:
      w.array() *= kappa.entries.array();
      break;
    case WeightMode::nhwu:
      break;
    case WeightMode::phwu: {
      const double mean = kappa.entries.mean();
      w.array() *= kappa.entries.array() - mean;
      break;
    }
  }
  w.diagonal().setZero();
  if (!(max_abs(w) > 1e-12 * scale)) {
    throw Error(ErrorCode::degenerate_weight,
                std::string("weight matrix is identically zero (mode ") +
                    std::string(to_string(mode)) + ")");
  }
  return WeightMatrix(std::move(w), mode);
}

}  // namespace hwu
