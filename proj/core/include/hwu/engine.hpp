#pragma once

#include <cstdint>
#include <optional>

#include "hwu/quadform.hpp"
#include "hwu/rank_kernel.hpp"
#include "hwu/weights.hpp"

namespace hwu {

struct AssociationResult {
  double u_stat = 0.0;
  PValue p_asymptotic;
  std::optional<PValue> p_permutation;
  Index n_used = 0;
  WeightMode mode = WeightMode::hwu;
  std::size_t eigenvalue_count = 0;
  bool used_fallback = false;
};

struct PermutationConfig {
  int permutations = 1000;
  std::uint64_t seed = 0;
};

/// U = s' W s, which equals 2 sum_{i<j} w_ij s_i s_j since diag(W) = 0.
double u_statistic(const StandardizedScores& scores, const WeightMatrix& w);

/// Asymptotic test on precomputed rank scores.
AssociationResult asymptotic_test(const StandardizedScores& scores, const CovariateMatrix& z,
                                  const WeightMatrix& w);

/// Ranks y, standardizes against Z, and evaluates U against its
/// chi-square-mixture null.
AssociationResult asymptotic_test(const Vector& y, const CovariateMatrix& z,
                                  const WeightMatrix& w);

/// Permutation p-value (1 + #{U_b >= U_obs}) / (B + 1), permuting the
/// residualized score vector with W held fixed. Deterministic in cfg.seed.
PValue permutation_test(const StandardizedScores& scores, const WeightMatrix& w,
                        const PermutationConfig& cfg);

PValue permutation_test(const Vector& y, const CovariateMatrix& z, const WeightMatrix& w,
                        const PermutationConfig& cfg);

}  // namespace hwu
