#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "hwu/types.hpp"

namespace hwu {

enum class KappaKind { euclidean, crossprod, ibs, constant, precomputed };
enum class GsimKind { crossprod, match, multilocus };
enum class WeightMode { hwu, nhwu, phwu };

std::string_view to_string(KappaKind kind) noexcept;
std::string_view to_string(GsimKind kind) noexcept;
std::string_view to_string(WeightMode mode) noexcept;
WeightMode parse_weight_mode(std::string_view text);
GsimKind parse_gsim_kind(std::string_view text);

/// Background (latent-structure) similarity between subjects.
struct KappaMatrix {
  Matrix entries;
  KappaKind kind = KappaKind::precomputed;
  /// Covariate columns removed because they had zero variance.
  std::vector<Index> dropped_columns;

  Index size() const { return entries.rows(); }
};

/// Options for the covariate-based kappa builders.
struct KappaOptions {
  /// Center each column and scale it to unit (population) standard deviation.
  /// Zero-variance columns are dropped when this is on.
  bool standardize = true;
};

/// Importance matrix (1/D) I used as the default Euclidean metric.
Matrix default_importance(Index dims);
/// diag(omega)
Matrix importance_weights(const Vector& omega);
/// ((1/n) X'X)^{-1} on standardized X; the inverse correlation matrix.
Matrix inverse_correlation(const Matrix& covariates);

/// Column-standardizes `covariates` (population sd). Indices of
/// zero-variance columns are appended to `dropped` and the columns removed.
Matrix standardize_columns(const Matrix& covariates, std::vector<Index>* dropped = nullptr);

/// kappa_ij = exp(-(x_i - x_j) R (x_i - x_j)').
/// An empty `metric` selects default_importance(D) after column dropping.
KappaMatrix kappa_euclidean(const Matrix& covariates, const Matrix& metric = Matrix(),
                            KappaOptions options = {});

/// kappa = (1/D) X X'.
KappaMatrix kappa_crossprod(const Matrix& covariates, KappaOptions options = {});

/// Genome-wide averaged identity-by-state, scaled to [0, 1]:
/// kappa_ij = (1/(2Q)) sum_q (2 - |g_qi - g_qj|). Rows are subjects.
KappaMatrix kappa_ibs(const Matrix& dosages);

/// kappa == 1 everywhere.
KappaMatrix kappa_constant(Index n, double value = 1.0);

/// Wraps an existing symmetric matrix; throws if it is not symmetric.
KappaMatrix kappa_precomputed(Matrix entries);

/// Reads a whitespace-delimited n x n matrix and validates symmetry.
KappaMatrix load_kappa(const std::filesystem::path& path);

/// Genotypes at Q >= 1 markers for n subjects (rows are subjects). Any finite
/// coding is accepted, so rescaled or centred dosages work with crossprod.
class GeneticSimilarity {
 public:
  GeneticSimilarity(Matrix dosages, GsimKind kind);

  /// Single-marker convenience.
  static GeneticSimilarity single(const Vector& dosage, GsimKind kind);

  Index subjects() const { return dosages_.rows(); }
  Index markers() const { return dosages_.cols(); }
  GsimKind kind() const { return kind_; }
  const Matrix& dosages() const { return dosages_; }

  /// f(G_i, G_j)
  double operator()(Index i, Index j) const;

  /// The full n x n matrix of f values.
  Matrix matrix() const;

 private:
  Matrix dosages_;
  GsimKind kind_;
};

/// Symmetric weight matrix with an exactly zero diagonal.
class WeightMatrix {
 public:
  /// Validates symmetry (1e-12 relative) and zeroes the diagonal.
  explicit WeightMatrix(Matrix entries, WeightMode mode = WeightMode::hwu);

  const Matrix& entries() const { return entries_; }
  WeightMode mode() const { return mode_; }
  Index size() const { return entries_.rows(); }

 private:
  Matrix entries_;
  WeightMode mode_;
};

/// Mean-imputes NaN entries of a dosage vector in place. Returns the number
/// of imputed entries; a vector with no observed values is set to zero.
std::size_t impute_mean(std::span<double> dosage);

/// HWU: w = kappa * f; NHWU: w = f; PHWU: w = (kappa - mean(kappa)) * f.
/// Throws degenerate_weight when the composed matrix is identically zero.
WeightMatrix compose_weight(const KappaMatrix& kappa, const GeneticSimilarity& gs,
                            WeightMode mode);

}  // namespace hwu
