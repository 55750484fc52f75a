#include "tune/forest.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "tune/random.hpp"

namespace tune {
namespace {

FeatureMatrix RandomX(std::size_t n, std::size_t d, Rng& rng) {
  FeatureMatrix X(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X.row(i)[j] = UniformReal(rng, 0, 10);
  }
  return X;
}

TEST(Forest, SinglePointPredictsItsValueEverywhere) {
  const FeatureMatrix X = FeatureMatrix::FromRows({{1.0, 2.0}});
  const std::vector<double> y{5.0};
  const ForestModel m = FitForest(X, y, ForestParams{});
  ASSERT_EQ(m.trees().size(), 100u);
  for (const auto& x : std::vector<std::vector<double>>{{1, 2}, {-4, 9}, {100, 0}}) {
    for (double p : m.PerTreePredictions(x)) EXPECT_EQ(p, 5.0);
    const MeanStd ms = PredictMeanStd(m, x);
    EXPECT_EQ(ms.mean, 5.0);
    EXPECT_EQ(ms.std, 0.0);
  }
}

TEST(Forest, ConstantResponseHasZeroSpread) {
  Rng rng(1);
  const FeatureMatrix X = RandomX(40, 3, rng);
  const std::vector<double> y(40, 7.25);
  const ForestModel m = FitForest(X, y, ForestParams{});
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> x{UniformReal(rng, -5, 15), UniformReal(rng, -5, 15), UniformReal(rng, -5, 15)};
    const MeanStd ms = PredictMeanStd(m, x);
    EXPECT_EQ(ms.mean, 7.25);
    EXPECT_EQ(ms.std, 0.0);
  }
}

TEST(Forest, SummarizeExample) {
  const MeanStd ms = SummarizePredictions(std::vector<double>{2.0, 4.0});
  EXPECT_DOUBLE_EQ(ms.mean, 3.0);
  EXPECT_DOUBLE_EQ(ms.std, 1.0);
  const MeanStd one = SummarizePredictions(std::vector<double>{-3.5});
  EXPECT_EQ(one.mean, -3.5);
  EXPECT_EQ(one.std, 0.0);
  EXPECT_THROW(SummarizePredictions(std::vector<double>{}), std::invalid_argument);
}

TEST(Forest, SummaryProperties) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(1 + UniformIndex(rng, 50));
    for (auto& v : p) v = UniformReal(rng, -1e3, 1e3);
    const MeanStd ms = SummarizePredictions(p);
    const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
    EXPECT_GE(ms.mean, *lo);
    EXPECT_LE(ms.mean, *hi);
    EXPECT_GE(ms.std, 0.0);
    EXPECT_LE(ms.std, (*hi - *lo) / 2 + 1e-9);
    std::vector<double> shuffled(p.rbegin(), p.rend());
    const MeanStd back = SummarizePredictions(shuffled);
    EXPECT_NEAR(back.mean, ms.mean, 1e-9);
    EXPECT_NEAR(back.std, ms.std, 1e-9);
  }
}

TEST(Forest, MeanStdMatchesPerTreePredictions) {
  Rng rng(4);
  const FeatureMatrix X = RandomX(60, 4, rng);
  std::vector<double> y;
  for (std::size_t i = 0; i < 60; ++i) y.push_back(X(i, 0) * X(i, 1) + UniformReal(rng, 0, 3));
  const ForestModel m = FitForest(X, y, ForestParams{50, 12, 1, 1.0, 3});
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(4);
    for (auto& v : x) v = UniformReal(rng, 0, 10);
    const auto per_tree = m.PerTreePredictions(x);
    double mean = 0.0;
    for (double p : per_tree) mean += p;
    mean /= per_tree.size();
    double var = 0.0;
    for (double p : per_tree) var += (p - mean) * (p - mean);
    const MeanStd ms = PredictMeanStd(m, x);
    EXPECT_NEAR(ms.mean, mean, 1e-9);
    EXPECT_NEAR(ms.std, std::sqrt(var / per_tree.size()), 1e-9);
    EXPECT_GE(ms.mean, *ylo);
    EXPECT_LE(ms.mean, *yhi);
  }
}

TEST(Forest, RefitIsDeterministic) {
  Rng rng(9);
  const FeatureMatrix X = RandomX(30, 3, rng);
  std::vector<double> y(30);
  for (auto& v : y) v = UniformReal(rng, 0, 1);
  ForestParams params;
  params.seed = 77;
  const ForestModel a = FitForest(X, y, params);
  const ForestModel b = FitForest(X, y, params);
  params.seed = 78;
  const ForestModel c = FitForest(X, y, params);
  bool differs = false;
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> x{UniformReal(rng, 0, 10), UniformReal(rng, 0, 10), UniformReal(rng, 0, 10)};
    EXPECT_EQ(a.PerTreePredictions(x), b.PerTreePredictions(x));
    differs |= a.PerTreePredictions(x) != c.PerTreePredictions(x);
  }
  EXPECT_TRUE(differs);
}

TEST(Forest, Errors) {
  const FeatureMatrix X = FeatureMatrix::FromRows({{1.0, 2.0}, {3.0, 4.0}});
  const std::vector<double> y{1.0, 2.0};
  const ForestModel m = FitForest(X, y, ForestParams{});
  EXPECT_THROW(m.PerTreePredictions(std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(PredictMeanStd(m, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
  EXPECT_THROW(FitForest(FeatureMatrix(), std::vector<double>{}, ForestParams{}), std::invalid_argument);
  EXPECT_THROW(FitForest(X, std::vector<double>{1.0}, ForestParams{}), std::invalid_argument);
  EXPECT_THROW(FitForest(X, y, ForestParams{0}), std::invalid_argument);
  EXPECT_THROW(FitForest(X, y, ForestParams{10, 0}), std::invalid_argument);
  EXPECT_THROW(FitForest(X, y, ForestParams{10, 5, 1, 1.5}), std::invalid_argument);
  EXPECT_THROW(FitForest(X, y, ForestParams{10, 5, 1, 0.0}), std::invalid_argument);
}

}  // namespace
}  // namespace tune
