#include <benchmark/benchmark.h>

#include "hwu/engine.hpp"
#include "hwu/quadform.hpp"
#include "hwu/simgen.hpp"

namespace {

struct Fixture {
  hwu::Vector y;
  hwu::Vector g;
  hwu::KappaMatrix kappa;

  explicit Fixture(hwu::Index n) {
    hwu::SimulationConfig cfg = hwu::default_config(hwu::Scenario::two_pop);
    cfg.n = n;
    const hwu::Dataset d = hwu::simulate(cfg, 0);
    y = d.y;
    g = d.g;
    kappa = hwu::kappa_euclidean(d.x);
  }
};

void BM_UStatistic(benchmark::State& state) {
  const Fixture f(state.range(0));
  const auto z = hwu::CovariateMatrix::intercept_only(state.range(0));
  const auto s = hwu::rank_scores(f.y, z);
  const auto w = hwu::compose_weight(
      f.kappa, hwu::GeneticSimilarity::single(f.g, hwu::GsimKind::crossprod), hwu::WeightMode::hwu);
  for (auto _ : state) benchmark::DoNotOptimize(hwu::u_statistic(s, w));
}
BENCHMARK(BM_UStatistic)->Arg(500)->Arg(1000);

void BM_NullMixture(benchmark::State& state) {
  const Fixture f(state.range(0));
  const auto z = hwu::CovariateMatrix::intercept_only(state.range(0));
  const auto w = hwu::compose_weight(
      f.kappa, hwu::GeneticSimilarity::single(f.g, hwu::GsimKind::crossprod), hwu::WeightMode::hwu);
  for (auto _ : state) benchmark::DoNotOptimize(hwu::null_mixture(w, z).size());
}
BENCHMARK(BM_NullMixture)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AsymptoticTest(benchmark::State& state) {
  const Fixture f(state.range(0));
  const auto z = hwu::CovariateMatrix::intercept_only(state.range(0));
  const auto w = hwu::compose_weight(
      f.kappa, hwu::GeneticSimilarity::single(f.g, hwu::GsimKind::crossprod), hwu::WeightMode::hwu);
  for (auto _ : state) benchmark::DoNotOptimize(hwu::asymptotic_test(f.y, z, w).u_stat);
}
BENCHMARK(BM_AsymptoticTest)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Davies(benchmark::State& state) {
  std::vector<double> lambdas;
  for (int k = 0; k < state.range(0); ++k) lambdas.push_back(1.0 / (1.0 + k) - 0.02 * k);
  const hwu::ChiSquareMixture mix(lambdas);
  for (auto _ : state) benchmark::DoNotOptimize(hwu::davies_pvalue(mix, 3.0).value);
}
BENCHMARK(BM_Davies)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
