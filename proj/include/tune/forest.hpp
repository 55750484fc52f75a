// Random-forest regression surrogate with per-tree spread as uncertainty.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tune/tree.hpp"

namespace tune {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 12;
  int min_samples_leaf = 1;
  double bootstrap_fraction = 1.0;  // resample size as a fraction of n, with replacement
  std::uint64_t seed = 0;

  void Validate() const;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<RegressionTree> trees, std::size_t num_features);

  std::size_t num_features() const { return num_features_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  std::vector<double> PerTreePredictions(std::span<const double> x) const;

 private:
  std::vector<RegressionTree> trees_;
  std::size_t num_features_ = 0;
};

// Each tree is grown on its own bootstrap resample drawn from a stream keyed
// by (seed, tree index), so the fit does not depend on construction order.
ForestModel FitForest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params);

// Mean and population standard deviation of the per-tree predictions.
MeanStd PredictMeanStd(const ForestModel& model, std::span<const double> x);

// Mean/std over a set of per-tree predictions.
MeanStd SummarizePredictions(std::span<const double> per_tree);

}  // namespace tune
