#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hwu/engine.hpp"
#include "hwu/errors.hpp"
#include "oracles.hpp"

namespace {

using hwu::CovariateMatrix;
using hwu::GeneticSimilarity;
using hwu::GsimKind;
using hwu::Matrix;
using hwu::Vector;
using hwu::WeightMode;

struct Data {
  Vector y;
  Vector g;
  Matrix cov;
  hwu::KappaMatrix kappa;
};

Data make_data(hwu::Index n, std::mt19937_64& rng) {
  Data d;
  d.y = oracle::random_normal(n, 1, rng);
  d.g = oracle::random_dosage(n, 0.3, rng);
  d.cov = oracle::random_normal(n, 2, rng);
  d.kappa = hwu::kappa_euclidean(oracle::random_normal(n, 3, rng));
  return d;
}

TEST(UStatistic, MatchesDoubleLoop) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const Data d = make_data(40, rng);
    const auto z = CovariateMatrix::with_intercept(d.cov);
    const auto s = hwu::rank_scores(d.y, z);
    const auto w =
        hwu::compose_weight(d.kappa, GeneticSimilarity::single(d.g, GsimKind::crossprod), WeightMode::hwu);
    const double want = oracle::u_stat(oracle::scores(d.y, oracle::with_intercept(d.cov)),
                                       w.entries());
    EXPECT_NEAR(hwu::u_statistic(s, w), want, 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST(UStatistic, SizeMismatch) {
  const auto s = hwu::rank_scores(Vector::LinSpaced(5, 0, 1), CovariateMatrix::intercept_only(5));
  const hwu::WeightMatrix w(Matrix::Ones(4, 4));
  EXPECT_THROW(hwu::u_statistic(s, w), hwu::Error);
}

TEST(AsymptoticTest, ConstantKappaMakesHwuEqualNhwu) {
  std::mt19937_64 rng(2);
  const Data d = make_data(60, rng);
  const auto z = CovariateMatrix::intercept_only(60);
  const auto gs = GeneticSimilarity::single(d.g, GsimKind::crossprod);
  const auto kappa = hwu::kappa_constant(60);
  const auto a = hwu::asymptotic_test(d.y, z, hwu::compose_weight(kappa, gs, WeightMode::hwu));
  const auto b = hwu::asymptotic_test(d.y, z, hwu::compose_weight(kappa, gs, WeightMode::nhwu));
  EXPECT_EQ(a.u_stat, b.u_stat);
  EXPECT_EQ(a.p_asymptotic.value, b.p_asymptotic.value);
  EXPECT_EQ(a.mode, WeightMode::hwu);
  EXPECT_EQ(b.mode, WeightMode::nhwu);
}

TEST(AsymptoticTest, ResultFields) {
  std::mt19937_64 rng(3);
  const Data d = make_data(80, rng);
  const auto z = CovariateMatrix::with_intercept(d.cov);
  const auto w =
      hwu::compose_weight(d.kappa, GeneticSimilarity::single(d.g, GsimKind::match), WeightMode::hwu);
  const auto r = hwu::asymptotic_test(d.y, z, w);
  EXPECT_EQ(r.n_used, 80);
  EXPECT_GT(r.eigenvalue_count, 0u);
  EXPECT_GE(r.p_asymptotic.value, hwu::kMinPValue);
  EXPECT_LE(r.p_asymptotic.value, 1.0);
  EXPECT_FALSE(r.p_permutation.has_value());
}

TEST(AsymptoticTest, StrongHeterogeneousSignalIsDetected) {
  // opposite genetic effects in two latent groups
  std::mt19937_64 rng(4);
  const hwu::Index n = 400;
  std::normal_distribution<double> z01;
  Vector x(n), y(n);
  const Vector g = oracle::random_dosage(n, 0.3, rng);
  for (hwu::Index i = 0; i < n; ++i) {
    const double a = i < n / 2 ? -1.0 : 1.0;
    x[i] = a + 0.5 * z01(rng);
    y[i] = a * 0.8 * g[i] + z01(rng);
  }
  const auto z = CovariateMatrix::intercept_only(n);
  const auto gs = GeneticSimilarity::single(g, GsimKind::crossprod);
  const auto kappa = hwu::kappa_euclidean(x);
  const auto hw = hwu::asymptotic_test(y, z, hwu::compose_weight(kappa, gs, WeightMode::hwu));
  const auto nh = hwu::asymptotic_test(y, z, hwu::compose_weight(kappa, gs, WeightMode::nhwu));
  EXPECT_LT(hw.p_asymptotic.value, 1e-6);
  EXPECT_GT(nh.p_asymptotic.value, hw.p_asymptotic.value);
}

TEST(PermutationTest, ZeroWeightGivesOne) {
  std::mt19937_64 rng(5);
  const Data d = make_data(30, rng);
  const hwu::WeightMatrix w(Matrix::Zero(30, 30));
  const auto p = hwu::permutation_test(d.y, CovariateMatrix::intercept_only(30), w, {200, 1});
  EXPECT_EQ(p.value, 1.0);
  EXPECT_EQ(p.method, hwu::PMethod::permutation);
}

TEST(PermutationTest, DeterministicAndBounded) {
  std::mt19937_64 rng(6);
  const Data d = make_data(50, rng);
  const auto z = CovariateMatrix::intercept_only(50);
  const auto w =
      hwu::compose_weight(d.kappa, GeneticSimilarity::single(d.g, GsimKind::crossprod), WeightMode::hwu);
  const auto a = hwu::permutation_test(d.y, z, w, {500, 42});
  const auto b = hwu::permutation_test(d.y, z, w, {500, 42});
  EXPECT_EQ(a.value, b.value);
  EXPECT_GE(a.value, 1.0 / 501);
  EXPECT_LE(a.value, 1.0);
  EXPECT_THROW(hwu::permutation_test(d.y, z, w, {99, 1}), hwu::Error);
}

TEST(PermutationTest, NullPValuesAreUniform) {
  // Kolmogorov-Smirnov distance over 500 null replicates, n = 100, B = 5000
  std::mt19937_64 rng(7);
  const hwu::Index n = 100;
  const auto z = CovariateMatrix::intercept_only(n);
  std::vector<double> ps;
  for (int rep = 0; rep < 500; ++rep) {
    const Data d = make_data(n, rng);
    const auto w = hwu::compose_weight(d.kappa, GeneticSimilarity::single(d.g, GsimKind::crossprod),
                                       WeightMode::hwu);
    ps.push_back(hwu::permutation_test(d.y, z, w, {5000, static_cast<std::uint64_t>(rep)}).value);
  }
  std::sort(ps.begin(), ps.end());
  double ks = 0;
  const double m = static_cast<double>(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ks = std::max({ks, std::abs((i + 1) / m - ps[i]), std::abs(ps[i] - i / m)});
  }
  EXPECT_LT(ks, 0.05);
}

}  // namespace
