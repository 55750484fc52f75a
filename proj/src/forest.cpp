#include "tune/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tune/random.hpp"

namespace tune {

void ForestParams::Validate() const {
  if (n_trees < 1) throw std::invalid_argument("forest needs n_trees >= 1");
  if (max_depth < 1) throw std::invalid_argument("forest needs max_depth >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("forest needs min_samples_leaf >= 1");
  if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0)) {
    throw std::invalid_argument("forest bootstrap_fraction must lie in (0, 1]");
  }
}

ForestModel::ForestModel(std::vector<RegressionTree> trees, std::size_t num_features)
    : trees_(std::move(trees)), num_features_(num_features) {
  if (trees_.empty()) throw std::invalid_argument("forest must contain at least one tree");
  for (const auto& t : trees_) {
    if (t.num_features() != num_features_) {
      throw std::invalid_argument("all trees of a forest must share the feature dimension");
    }
  }
}

std::vector<double> ForestModel::PerTreePredictions(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                " entries, forest expects " + std::to_string(num_features_));
  }
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.Predict(x));
  return out;
}

ForestModel FitForest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params) {
  params.Validate();
  if (X.rows() == 0) throw std::invalid_argument("cannot fit a forest on an empty training set");
  if (y.size() != X.rows()) throw std::invalid_argument("forest: |X| and |y| differ");

  const std::size_t n = X.rows();
  std::vector<double> grad(n);
  const std::vector<double> hess(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) grad[i] = -y[i];

  const auto draws = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.bootstrap_fraction * static_cast<double>(n))));
  const TreeParams tree_params{params.max_depth, params.min_samples_leaf};

  std::vector<RegressionTree> trees;
  trees.reserve(params.n_trees);
  std::vector<std::size_t> rows(draws);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(DeriveSeed(params.seed, {static_cast<std::uint64_t>(t)}));
    for (auto& r : rows) r = UniformIndex(rng, n);
    trees.push_back(RegressionTree::Fit(X, rows, grad, hess, tree_params));
  }
  return ForestModel(std::move(trees), X.cols());
}

MeanStd SummarizePredictions(std::span<const double> per_tree) {
  if (per_tree.empty()) throw std::invalid_argument("no predictions to summarize");
  const auto [lo, hi] = std::minmax_element(per_tree.begin(), per_tree.end());
  if (*lo == *hi) return {*lo, 0.0};
  double sum = 0.0;
  for (double p : per_tree) sum += p;
  const double n = static_cast<double>(per_tree.size());
  const double mean = std::clamp(sum / n, *lo, *hi);
  double ss = 0.0;
  for (double p : per_tree) ss += (p - mean) * (p - mean);
  return {mean, std::sqrt(ss / n)};
}

MeanStd PredictMeanStd(const ForestModel& model, std::span<const double> x) {
  const std::vector<double> per_tree = model.PerTreePredictions(x);
  return SummarizePredictions(per_tree);
}

}  // namespace tune
