#include "hwu/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hwu/errors.hpp"
#include "hwu/rng.hpp"

namespace hwu {

double u_statistic(const StandardizedScores& scores, const WeightMatrix& w) {
  if (scores.scores.size() != w.size()) {
    throw Error(ErrorCode::invalid_input,
                "score length " + std::to_string(scores.scores.size()) +
                    " does not match weight matrix size " + std::to_string(w.size()));
  }
  return scores.scores.dot(w.entries() * scores.scores);
}

AssociationResult asymptotic_test(const StandardizedScores& scores, const CovariateMatrix& z,
                                  const WeightMatrix& w) {
  AssociationResult out;
  out.mode = w.mode();
  out.n_used = scores.scores.size();
  out.u_stat = u_statistic(scores, w);
  const ChiSquareMixture mix = null_mixture(w, z);
  out.eigenvalue_count = mix.size();
  out.p_asymptotic = mixture_pvalue(mix, out.u_stat);
  out.used_fallback = out.p_asymptotic.method != PMethod::davies;
  return out;
}

AssociationResult asymptotic_test(const Vector& y, const CovariateMatrix& z,
                                  const WeightMatrix& w) {
  return asymptotic_test(rank_scores(y, z), z, w);
}

PValue permutation_test(const StandardizedScores& scores, const WeightMatrix& w,
                        const PermutationConfig& cfg) {
  if (cfg.permutations < 100) {
    throw Error(ErrorCode::invalid_parameter, "at least 100 permutations are required");
  }
  const double observed = u_statistic(scores, w);
  const double tol = 1e-12 * std::max(1.0, std::abs(observed));
  const Matrix& wm = w.entries();

  Rng rng(stream_seed(cfg.seed, 0));
  Vector perm = scores.scores;
  long exceed = 0;
  for (int b = 0; b < cfg.permutations; ++b) {
    for (Index i = perm.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<Index> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    const double ub = perm.dot(wm * perm);
    if (ub >= observed - tol) ++exceed;
  }
  const double p = static_cast<double>(1 + exceed) / static_cast<double>(cfg.permutations + 1);
  return PValue{p, PMethod::permutation, fault_none};
}

PValue permutation_test(const Vector& y, const CovariateMatrix& z, const WeightMatrix& w,
                        const PermutationConfig& cfg) {
  return permutation_test(rank_scores(y, z), w, cfg);
}

}  // namespace hwu
