#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "hwu/rng.hpp"
#include "hwu/types.hpp"
#include "hwu/weights.hpp"

namespace hwu {

enum class Scenario { two_pop, multi_pop, nonnormal };
enum class PhenotypeKind { binary, continuous };
enum class ErrorDist { normal, student_t, cauchy, normal_chisq_mixture };
enum class Method { hwu, nhwu, phwu, glm, vcscore };

std::string_view to_string(Scenario s) noexcept;
std::string_view to_string(PhenotypeKind k) noexcept;
std::string_view to_string(ErrorDist e) noexcept;
std::string_view to_string(Method m) noexcept;
Scenario parse_scenario(std::string_view text);
PhenotypeKind parse_phenotype_kind(std::string_view text);
/// Accepts normal, t<df> (e.g. t2), cauchy, mixture.
ErrorDist parse_error_dist(std::string_view text, double* t_df);

/// Simulation settings. Constants the published simulations left to
/// supplementary material default to: maf 0.3, intercept 0, sigma_c 0.5,
/// two-population centers -1/+1, twenty-population centers drawn once from
/// N(0, 1), covariate effect 0.5.
struct SimulationConfig {
  Scenario scenario = Scenario::two_pop;
  Index n = 1000;
  int n_subpop = 2;
  /// Fixed per-subpopulation effects (two_pop).
  std::vector<double> betas = {0.0, 0.0};
  /// Mean and standard deviation of the effect distribution (multi_pop and
  /// nonnormal).
  double mu_beta = 0.0;
  double sigma_beta = 0.0;
  double maf = 0.3;
  PhenotypeKind phenotype = PhenotypeKind::continuous;
  ErrorDist error = ErrorDist::normal;
  double t_df = 2.0;
  double sigma_c = 0.5;
  /// Latent-structure covariates per subject (D).
  int n_covariates = 1;
  bool confounding = false;
  /// Covariance structure of the per-subject effects in the nonnormal
  /// scenario (euclidean or crossprod).
  KappaKind true_kappa = KappaKind::euclidean;
  double intercept = 0.0;
  double covariate_effect = 0.5;
  /// Log-odds shift of the allele frequency per unit of the confounder.
  double confounder_strength = 1.0;
  std::uint64_t seed = 1;

  /// Throws invalid_parameter on inconsistent settings.
  void validate() const;
};

/// Scenario defaults: two_pop (D = 1), multi_pop (20 subpopulations,
/// D = 25), nonnormal (D = 5, t2 errors).
SimulationConfig default_config(Scenario scenario);

struct Dataset {
  Vector y;
  Vector g;
  /// Latent-structure covariates used to build kappa (n x D).
  Matrix x;
  /// Adjustment covariates without the intercept (n x p, p may be 0).
  Matrix z;
  std::vector<int> subpop;
  /// Per-subject genetic effect.
  Vector beta;
};

/// Hardy-Weinberg dosages, Binomial(2, maf).
Vector gen_genotypes(Index n, double maf, std::uint64_t seed);
Vector gen_genotypes(Index n, double maf, Rng& rng);

/// One draw from the configured error distribution. The mixture is
/// a * chi2_1 + (1 - a) * N(5, 1) with a ~ Bernoulli(0.6).
double draw_error(ErrorDist dist, double t_df, Rng& rng);

Dataset sim_two_pop(const SimulationConfig& cfg, Rng& rng);
Dataset sim_multi_pop(const SimulationConfig& cfg, Rng& rng);
Dataset sim_nonnormal(const SimulationConfig& cfg, Rng& rng);

/// Dataset for replicate `replicate`, drawn from the stream
/// (cfg.seed, replicate) so the result does not depend on scheduling.
Dataset simulate(const SimulationConfig& cfg, std::uint64_t replicate);

/// Per-subpopulation centers a_i^d for the multi-population scenario.
Matrix multi_pop_centers(int n_subpop, int dims);

/// A test to run on each replicate.
struct MethodSpec {
  Method method = Method::hwu;
  /// Background similarity used by hwu, phwu and vcscore.
  KappaKind kappa = KappaKind::euclidean;

  std::string label() const;
};

/// Parses "hwu", "nhwu", "phwu", "glm", "vcscore", optionally suffixed with
/// ":euclidean" or ":crossprod".
MethodSpec parse_method(std::string_view text);

struct PowerEstimate {
  std::string method;
  double rejection_rate = 0.0;
  int replicates = 0;
  double alpha = 0.05;
  double mc_stderr = 0.0;
};

struct PowerStudy {
  std::vector<PowerEstimate> estimates;
  /// replicates x methods
  Matrix pvalues;
};

/// p-values of each method on one dataset.
std::vector<double> evaluate_methods(const Dataset& data, const SimulationConfig& cfg,
                                     const std::vector<MethodSpec>& methods);

PowerEstimate make_estimate(std::string method, const std::vector<double>& pvalues,
                            double alpha);

/// Runs every method on `replicates` datasets. threads = 0 uses the
/// hardware concurrency. Results are independent of the thread count.
PowerStudy power_study(const SimulationConfig& cfg, const std::vector<MethodSpec>& methods,
                       int replicates, double alpha, unsigned threads = 0);

PowerEstimate power_estimate(const MethodSpec& method, const SimulationConfig& cfg,
                             int replicates, double alpha, unsigned threads = 0);

/// Custom per-replicate test; `rng` is a stream private to the replicate.
using ReplicateTest = std::function<double(const Dataset&, Rng& rng)>;

PowerEstimate power_estimate(const std::string& label, const ReplicateTest& test,
                             const SimulationConfig& cfg, int replicates, double alpha,
                             unsigned threads = 0);

/// "b=-0.5,0.5" or "mu=0.3;sd=0.5"
std::string beta_spec(const SimulationConfig& cfg);

}  // namespace hwu
