// Axis-aligned regression trees grown on per-row (gradient, hessian) pairs.
//
// A node's score is G^2 / H over the rows it holds and a leaf predicts
// -G / H. With grad = -y and hess = 1 the score gain of a split is exactly
// the reduction in sum of squared errors and leaves predict the mean
// response, so the same builder serves both the random-forest surrogate
// and Newton boosting.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tune {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static FeatureMatrix FromRows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  void AppendRow(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TreeParams {
  int max_depth = 12;        // number of split levels below the root
  int min_samples_leaf = 1;  // counted with bootstrap multiplicity
  double min_child_weight = 0.0;  // minimum hessian sum per child
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf prediction
  };

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  // Grows a tree on `rows` (indices into X, repeats allowed). grad and hess
  // are indexed by X row.
  static RegressionTree Fit(const FeatureMatrix& X, std::span<const std::size_t> rows,
                            std::span<const double> grad, std::span<const double> hess,
                            const TreeParams& params);

  // Best single split of `rows` by score gain; feature == -1 when no split
  // has positive gain. Ties resolve to the lowest feature, then the lowest
  // threshold.
  static Split FindBestSplit(const FeatureMatrix& X, std::span<const std::size_t> rows,
                             std::span<const double> grad, std::span<const double> hess,
                             int min_samples_leaf, double min_child_weight = 0.0);

  double Predict(std::span<const double> x) const;

  void ScaleLeaves(double factor);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_leaves() const;

 private:
  int Grow(const FeatureMatrix& X, std::vector<std::size_t>& rows, std::span<const double> grad,
           std::span<const double> hess, const TreeParams& params, int depth);

  std::vector<Node> nodes_;
  std::size_t num_features_ = 0;
};

}  // namespace tune
