#include "hwu/simgen.hpp"

#include <charconv>
#include <optional>
#include <cmath>
#include <sstream>
#include <string>

#include "hwu/comparators.hpp"
#include "hwu/engine.hpp"
#include "hwu/errors.hpp"
#include "parallel.hpp"

namespace hwu {

namespace {

constexpr std::uint64_t kCenterSeed = 0x5eed'ce17'e25ULL;
constexpr double kSqrt3 = 1.7320508075688772;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double parse_double(std::string_view text, const char* what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::invalid_parameter,
                std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

Vector draw_phenotype(const SimulationConfig& cfg, const Vector& linear_predictor, Rng& rng) {
  const Index n = linear_predictor.size();
  Vector y(n);
  if (cfg.phenotype == PhenotypeKind::binary) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index i = 0; i < n; ++i) y[i] = unif(rng) < logistic(linear_predictor[i]) ? 1.0 : 0.0;
  } else {
    for (Index i = 0; i < n; ++i) y[i] = linear_predictor[i] + draw_error(cfg.error, cfg.t_df, rng);
  }
  return y;
}

Vector uniform_effects(const SimulationConfig& cfg, int count, Rng& rng) {
  Vector b(count);
  if (cfg.sigma_beta == 0.0) {
    b.setConstant(cfg.mu_beta);
    return b;
  }
  const double half = kSqrt3 * cfg.sigma_beta;
  std::uniform_real_distribution<double> unif(cfg.mu_beta - half, cfg.mu_beta + half);
  for (int i = 0; i < count; ++i) b[i] = unif(rng);
  return b;
}

// Effects with covariance sigma_beta^2 * K(x), mean mu_beta.
Vector structured_effects(const SimulationConfig& cfg, const Matrix& x, Rng& rng) {
  const Index n = x.rows();
  Vector beta = Vector::Constant(n, cfg.mu_beta);
  if (cfg.sigma_beta == 0.0) return beta;
  std::normal_distribution<double> normal(0.0, 1.0);
  if (cfg.true_kappa == KappaKind::crossprod) {
    const Matrix xs = standardize_columns(x);
    Vector w(xs.cols());
    for (Index d = 0; d < w.size(); ++d) w[d] = normal(rng);
    beta += cfg.sigma_beta / std::sqrt(static_cast<double>(xs.cols())) * (xs * w);
    return beta;
  }
  if (cfg.true_kappa != KappaKind::euclidean) {
    throw Error(ErrorCode::invalid_parameter, "true kappa must be euclidean or crossprod");
  }
  Matrix k = kappa_euclidean(x).entries;
  Vector xi(n);
  for (Index i = 0; i < n; ++i) xi[i] = normal(rng);
  k.diagonal().array() += 1e-8;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() == Eigen::Success) {
    const Vector lx = llt.matrixL() * xi;
    beta += cfg.sigma_beta * lx;
    return beta;
  }
  Eigen::LDLT<Matrix> ldlt(k);
  Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  const Vector dx = d.cwiseProduct(xi);
  const Vector v = ldlt.matrixL() * dx;
  const Vector pv = ldlt.transpositionsP().transpose() * v;
  beta += cfg.sigma_beta * pv;
  return beta;
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::two_pop: return "two_pop";
    case Scenario::multi_pop: return "multi_pop";
    case Scenario::nonnormal: return "nonnormal";
  }
  return "unknown";
}

std::string_view to_string(PhenotypeKind k) noexcept {
  return k == PhenotypeKind::binary ? "binary" : "continuous";
}

std::string_view to_string(ErrorDist e) noexcept {
  switch (e) {
    case ErrorDist::normal: return "normal";
    case ErrorDist::student_t: return "t";
    case ErrorDist::cauchy: return "cauchy";
    case ErrorDist::normal_chisq_mixture: return "mixture";
  }
  return "unknown";
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::hwu: return "hwu";
    case Method::nhwu: return "nhwu";
    case Method::phwu: return "phwu";
    case Method::glm: return "glm";
    case Method::vcscore: return "vcscore";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "two_pop") return Scenario::two_pop;
  if (text == "multi_pop") return Scenario::multi_pop;
  if (text == "nonnormal") return Scenario::nonnormal;
  throw Error(ErrorCode::invalid_parameter, "unknown scenario '" + std::string(text) + "'");
}

PhenotypeKind parse_phenotype_kind(std::string_view text) {
  if (text == "binary") return PhenotypeKind::binary;
  if (text == "continuous") return PhenotypeKind::continuous;
  throw Error(ErrorCode::invalid_parameter, "unknown phenotype kind '" + std::string(text) + "'");
}

ErrorDist parse_error_dist(std::string_view text, double* t_df) {
  if (text == "normal") return ErrorDist::normal;
  if (text == "cauchy") return ErrorDist::cauchy;
  if (text == "mixture") return ErrorDist::normal_chisq_mixture;
  if (text.size() > 1 && text.front() == 't') {
    const double df = parse_double(text.substr(1), "t degrees of freedom");
    if (!(df > 0.0)) throw Error(ErrorCode::invalid_parameter, "t df must be positive");
    if (t_df) *t_df = df;
    return ErrorDist::student_t;
  }
  throw Error(ErrorCode::invalid_parameter, "unknown error distribution '" + std::string(text) + "'");
}

void SimulationConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_parameter, msg); };
  if (n < 10) fail("n must be at least 10");
  if (!(maf > 0.0 && maf <= 0.5)) fail("maf must lie in (0, 0.5]");
  if (!(sigma_c > 0.0)) fail("sigma_c must be positive");
  if (sigma_beta < 0.0) fail("sigma_beta must be non-negative");
  if (n_covariates < 1) fail("need at least one latent covariate");
  if (error == ErrorDist::student_t && !(t_df > 0.0)) fail("t df must be positive");
  switch (scenario) {
    case Scenario::two_pop:
      if (n_subpop != 2) fail("two_pop requires n_subpop = 2");
      if (betas.size() != 2) fail("two_pop requires exactly two betas");
      break;
    case Scenario::multi_pop:
      if (n_subpop < 2) fail("multi_pop requires at least two subpopulations");
      if (n < n_subpop) fail("fewer subjects than subpopulations");
      break;
    case Scenario::nonnormal:
      if (true_kappa != KappaKind::euclidean && true_kappa != KappaKind::crossprod) {
        fail("true kappa must be euclidean or crossprod");
      }
      break;
  }
}

SimulationConfig default_config(Scenario scenario) {
  SimulationConfig cfg;
  cfg.scenario = scenario;
  switch (scenario) {
    case Scenario::two_pop:
      break;
    case Scenario::multi_pop:
      cfg.n_subpop = 20;
      cfg.n_covariates = 25;
      cfg.betas.clear();
      break;
    case Scenario::nonnormal:
      cfg.n_subpop = 1;
      cfg.n_covariates = 5;
      cfg.betas.clear();
      cfg.error = ErrorDist::student_t;
      break;
  }
  return cfg;
}

Vector gen_genotypes(Index n, double maf, Rng& rng) {
  if (!(maf > 0.0 && maf <= 0.5)) throw Error(ErrorCode::invalid_parameter, "maf must lie in (0, 0.5]");
  std::binomial_distribution<int> binom(2, maf);
  Vector g(n);
  for (Index i = 0; i < n; ++i) g[i] = binom(rng);
  return g;
}

Vector gen_genotypes(Index n, double maf, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return gen_genotypes(n, maf, rng);
}

double draw_error(ErrorDist dist, double t_df, Rng& rng) {
  switch (dist) {
    case ErrorDist::normal:
      return std::normal_distribution<double>(0.0, 1.0)(rng);
    case ErrorDist::student_t:
      return std::student_t_distribution<double>(t_df)(rng);
    case ErrorDist::cauchy:
      return std::cauchy_distribution<double>(0.0, 1.0)(rng);
    case ErrorDist::normal_chisq_mixture: {
      const bool chisq = std::bernoulli_distribution(0.6)(rng);
      const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
      return chisq ? z * z : 5.0 + z;
    }
  }
  return 0.0;
}

Matrix multi_pop_centers(int n_subpop, int dims) {
  Rng rng(kCenterSeed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n_subpop, dims);
  for (int i = 0; i < n_subpop; ++i) {
    for (int d = 0; d < dims; ++d) a(i, d) = normal(rng);
  }
  return a;
}

Dataset sim_two_pop(const SimulationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.scenario != Scenario::two_pop) {
    throw Error(ErrorCode::invalid_parameter, "configuration is not a two_pop scenario");
  }
  const Index n = cfg.n;
  Dataset data;
  data.subpop.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) data.subpop[i] = i < n / 2 ? 0 : 1;

  data.g = gen_genotypes(n, cfg.maf, rng);
  const double centers[2] = {-1.0, 1.0};
  std::normal_distribution<double> noise(0.0, cfg.sigma_c);
  data.x.resize(n, cfg.n_covariates);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < cfg.n_covariates; ++d) data.x(i, d) = centers[data.subpop[i]] + noise(rng);
  }
  data.z.resize(n, 0);
  data.beta.resize(n);
  for (Index i = 0; i < n; ++i) data.beta[i] = cfg.betas[data.subpop[i]];
  const Vector eta = Vector::Constant(n, cfg.intercept) + data.g.cwiseProduct(data.beta);
  data.y = draw_phenotype(cfg, eta, rng);
  return data;
}

Dataset sim_multi_pop(const SimulationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.scenario != Scenario::multi_pop) {
    throw Error(ErrorCode::invalid_parameter, "configuration is not a multi_pop scenario");
  }
  const Index n = cfg.n;
  const Matrix centers = multi_pop_centers(cfg.n_subpop, cfg.n_covariates);
  Dataset data;
  data.subpop.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) data.subpop[i] = static_cast<int>(i * cfg.n_subpop / n);

  const Vector effects = uniform_effects(cfg, cfg.n_subpop, rng);
  data.g = gen_genotypes(n, cfg.maf, rng);
  std::normal_distribution<double> noise(0.0, cfg.sigma_c);
  data.x.resize(n, cfg.n_covariates);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < cfg.n_covariates; ++d) data.x(i, d) = centers(data.subpop[i], d) + noise(rng);
  }
  data.z.resize(n, 0);
  data.beta.resize(n);
  for (Index i = 0; i < n; ++i) data.beta[i] = effects[data.subpop[i]];
  const Vector eta = Vector::Constant(n, cfg.intercept) + data.g.cwiseProduct(data.beta);
  data.y = draw_phenotype(cfg, eta, rng);
  return data;
}

Dataset sim_nonnormal(const SimulationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.scenario != Scenario::nonnormal) {
    throw Error(ErrorCode::invalid_parameter, "configuration is not a nonnormal scenario");
  }
  const Index n = cfg.n;
  Dataset data;
  data.subpop.assign(static_cast<std::size_t>(n), 0);
  std::normal_distribution<double> normal(0.0, 1.0);

  data.x.resize(n, cfg.n_covariates);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < cfg.n_covariates; ++d) data.x(i, d) = normal(rng);
  }
  data.z.resize(n, 1);
  for (Index i = 0; i < n; ++i) data.z(i, 0) = normal(rng);

  data.g.resize(n);
  const double base = std::log(cfg.maf / (1.0 - cfg.maf));
  for (Index i = 0; i < n; ++i) {
    const double p = cfg.confounding ? logistic(base + cfg.confounder_strength * data.z(i, 0)) : cfg.maf;
    data.g[i] = std::binomial_distribution<int>(2, p)(rng);
  }
  data.beta = structured_effects(cfg, data.x, rng);
  const Vector eta = Vector::Constant(n, cfg.intercept) + cfg.covariate_effect * data.z.col(0) +
                     data.g.cwiseProduct(data.beta);
  data.y = draw_phenotype(cfg, eta, rng);
  return data;
}

Dataset simulate(const SimulationConfig& cfg, std::uint64_t replicate) {
  Rng rng = make_rng(cfg.seed, replicate);
  switch (cfg.scenario) {
    case Scenario::two_pop: return sim_two_pop(cfg, rng);
    case Scenario::multi_pop: return sim_multi_pop(cfg, rng);
    case Scenario::nonnormal: return sim_nonnormal(cfg, rng);
  }
  throw Error(ErrorCode::invalid_parameter, "unknown scenario");
}

std::string MethodSpec::label() const {
  std::string out(to_string(method));
  if ((method == Method::hwu || method == Method::phwu || method == Method::vcscore) &&
      kappa != KappaKind::euclidean) {
    out += ":";
    out += to_string(kappa);
  }
  return out;
}

MethodSpec parse_method(std::string_view text) {
  MethodSpec spec;
  std::string_view name = text;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    name = text.substr(0, colon);
    const auto kappa = text.substr(colon + 1);
    if (kappa == "euclidean") {
      spec.kappa = KappaKind::euclidean;
    } else if (kappa == "crossprod") {
      spec.kappa = KappaKind::crossprod;
    } else {
      throw Error(ErrorCode::invalid_parameter, "unknown kappa '" + std::string(kappa) + "'");
    }
  }
  if (name == "hwu") spec.method = Method::hwu;
  else if (name == "nhwu") spec.method = Method::nhwu;
  else if (name == "phwu") spec.method = Method::phwu;
  else if (name == "glm") spec.method = Method::glm;
  else if (name == "vcscore") spec.method = Method::vcscore;
  else throw Error(ErrorCode::invalid_parameter, "unknown method '" + std::string(name) + "'");
  return spec;
}

std::vector<double> evaluate_methods(const Dataset& data, const SimulationConfig& cfg,
                                     const std::vector<MethodSpec>& methods) {
  const CovariateMatrix z = CovariateMatrix::with_intercept(data.z);
  const GeneticSimilarity gs = GeneticSimilarity::single(data.g, GsimKind::crossprod);

  std::optional<StandardizedScores> scores;
  std::optional<KappaMatrix> kappa_cache[2];
  auto kappa_for = [&](KappaKind kind) -> const KappaMatrix& {
    auto& slot = kappa_cache[kind == KappaKind::crossprod ? 1 : 0];
    if (!slot) {
      slot = kind == KappaKind::crossprod ? kappa_crossprod(data.x) : kappa_euclidean(data.x);
    }
    return *slot;
  };
  auto u_test = [&](const KappaMatrix& kappa, WeightMode mode) {
    if (!scores) scores = rank_scores(data.y, z);
    return asymptotic_test(*scores, z, compose_weight(kappa, gs, mode)).p_asymptotic.value;
  };

  std::vector<double> p;
  p.reserve(methods.size());
  for (const auto& m : methods) {
    switch (m.method) {
      case Method::hwu:
        p.push_back(u_test(kappa_for(m.kappa), WeightMode::hwu));
        break;
      case Method::nhwu:
        p.push_back(u_test(kappa_constant(data.y.size()), WeightMode::nhwu));
        break;
      case Method::phwu:
        p.push_back(u_test(kappa_for(m.kappa), WeightMode::phwu));
        break;
      case Method::glm: {
        const auto family =
            cfg.phenotype == PhenotypeKind::binary ? GlmFamily::logistic : GlmFamily::linear;
        p.push_back(glm_lrt(data.y, data.g, z, family).p.value);
        break;
      }
      case Method::vcscore:
        p.push_back(vc_score_test(data.y, data.g, z, kappa_for(m.kappa)).p.value);
        break;
    }
  }
  return p;
}

PowerEstimate make_estimate(std::string method, const std::vector<double>& pvalues, double alpha) {
  PowerEstimate est;
  est.method = std::move(method);
  est.replicates = static_cast<int>(pvalues.size());
  est.alpha = alpha;
  std::size_t hits = 0;
  for (double p : pvalues) hits += p <= alpha ? 1 : 0;
  const double r = pvalues.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pvalues.size());
  est.rejection_rate = r;
  est.mc_stderr = pvalues.empty() ? 0.0 : std::sqrt(r * (1.0 - r) / static_cast<double>(pvalues.size()));
  return est;
}

namespace {

void check_replicates(int replicates) {
  if (replicates < 100) {
    throw Error(ErrorCode::invalid_parameter, "at least 100 replicates are required");
  }
}

[[noreturn]] void rethrow_with_replicate(std::size_t r, const std::exception& e) {
  const std::string msg = "replicate " + std::to_string(r) + ": " + e.what();
  if (const auto* err = dynamic_cast<const Error*>(&e)) throw Error(err->code(), msg);
  throw std::runtime_error(msg);
}

}  // namespace

PowerStudy power_study(const SimulationConfig& cfg, const std::vector<MethodSpec>& methods,
                       int replicates, double alpha, unsigned threads) {
  cfg.validate();
  check_replicates(replicates);
  PowerStudy study;
  study.pvalues.resize(replicates, static_cast<Index>(methods.size()));
  detail::parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    try {
      const Dataset data = simulate(cfg, r);
      const std::vector<double> p = evaluate_methods(data, cfg, methods);
      for (std::size_t m = 0; m < p.size(); ++m) study.pvalues(static_cast<Index>(r), static_cast<Index>(m)) = p[m];
    } catch (const std::exception& e) {
      rethrow_with_replicate(r, e);
    }
  });
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto col = study.pvalues.col(static_cast<Index>(m));
    study.estimates.push_back(
        make_estimate(methods[m].label(), std::vector<double>(col.begin(), col.end()), alpha));
  }
  return study;
}

PowerEstimate power_estimate(const MethodSpec& method, const SimulationConfig& cfg,
                             int replicates, double alpha, unsigned threads) {
  return power_study(cfg, {method}, replicates, alpha, threads).estimates.front();
}

PowerEstimate power_estimate(const std::string& label, const ReplicateTest& test,
                             const SimulationConfig& cfg, int replicates, double alpha,
                             unsigned threads) {
  cfg.validate();
  check_replicates(replicates);
  std::vector<double> p(static_cast<std::size_t>(replicates));
  detail::parallel_for(p.size(), threads, [&](std::size_t r) {
    try {
      const Dataset data = simulate(cfg, r);
      Rng rng = make_rng(stream_seed(cfg.seed, r), 1);
      p[r] = test(data, rng);
    } catch (const std::exception& e) {
      rethrow_with_replicate(r, e);
    }
  });
  return make_estimate(label, p, alpha);
}

std::string beta_spec(const SimulationConfig& cfg) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  if (cfg.scenario == Scenario::two_pop) {
    out << "b=";
    for (std::size_t i = 0; i < cfg.betas.size(); ++i) out << (i ? "," : "") << cfg.betas[i];
  } else {
    out << "mu=" << cfg.mu_beta << ";sd=" << cfg.sigma_beta;
  }
  return out.str();
}

}  // namespace hwu
