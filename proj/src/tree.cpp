#include "tune/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tune {

namespace {

// Relative slack below which a split gain counts as no improvement.
constexpr double kGainTolerance = 1e-12;

struct Sums {
  double g = 0.0;
  double h = 0.0;
};

Sums Accumulate(std::span<const std::size_t> rows, std::span<const double> grad,
                std::span<const double> hess) {
  Sums s;
  for (std::size_t r : rows) {
    s.g += grad[r];
    s.h += hess[r];
  }
  return s;
}

// True when every row has the same leaf target -g/h; such a node cannot be
// improved by any split.
bool IsPure(std::span<const std::size_t> rows, std::span<const double> grad,
            std::span<const double> hess) {
  const double g0 = grad[rows.front()];
  const double h0 = hess[rows.front()];
  for (std::size_t r : rows) {
    if (grad[r] * h0 != g0 * hess[r]) return false;
  }
  return true;
}

}  // namespace

FeatureMatrix FeatureMatrix::FromRows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m;
  for (const auto& r : rows) m.AppendRow(r);
  return m;
}

void FeatureMatrix::AppendRow(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw std::invalid_argument("feature row has " + std::to_string(values.size()) +
                                " columns, expected " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

RegressionTree::Split RegressionTree::FindBestSplit(const FeatureMatrix& X,
                                                    std::span<const std::size_t> rows,
                                                    std::span<const double> grad,
                                                    std::span<const double> hess,
                                                    int min_samples_leaf,
                                                    double min_child_weight) {
  Split best;
  const std::size_t n = rows.size();
  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, min_samples_leaf));
  if (n < 2 * min_leaf) return best;

  const Sums total = Accumulate(rows, grad, hess);
  const double parent_score = total.g * total.g / total.h;
  const double tolerance = kGainTolerance * (std::abs(parent_score) + 1.0);

  std::vector<std::size_t> order(rows.begin(), rows.end());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return X(a, j) < X(b, j); });
    Sums left;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left.g += grad[order[k]];
      left.h += hess[order[k]];
      const double here = X(order[k], j);
      const double next = X(order[k + 1], j);
      if (here == next) continue;
      if (k + 1 < min_leaf || n - (k + 1) < min_leaf) continue;
      const double rg = total.g - left.g;
      const double rh = total.h - left.h;
      if (left.h <= 0.0 || rh <= 0.0) continue;
      if (left.h < min_child_weight || rh < min_child_weight) continue;
      const double gain = left.g * left.g / left.h + rg * rg / rh - parent_score;
      // Gains within rounding of the incumbent count as ties.
      if (gain > tolerance && gain > best.gain + tolerance) {
        best.feature = static_cast<int>(j);
        best.threshold = here + (next - here) / 2.0;
        // Midpoint can round onto `next` for adjacent doubles.
        if (!(best.threshold < next)) best.threshold = here;
        best.gain = gain;
      }
    }
  }
  return best;
}

RegressionTree RegressionTree::Fit(const FeatureMatrix& X, std::span<const std::size_t> rows,
                                   std::span<const double> grad, std::span<const double> hess,
                                   const TreeParams& params) {
  if (rows.empty()) throw std::invalid_argument("cannot fit a tree on zero rows");
  if (grad.size() != X.rows() || hess.size() != X.rows()) {
    throw std::invalid_argument("gradient/hessian length must match the feature matrix");
  }
  RegressionTree tree;
  tree.num_features_ = X.cols();
  std::vector<std::size_t> work(rows.begin(), rows.end());
  tree.Grow(X, work, grad, hess, params, 0);
  return tree;
}

int RegressionTree::Grow(const FeatureMatrix& X, std::vector<std::size_t>& rows,
                         std::span<const double> grad, std::span<const double> hess,
                         const TreeParams& params, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  if (IsPure(rows, grad, hess)) {
    nodes_[id].value = -grad[rows.front()] / hess[rows.front()];
    return id;
  }
  const Sums sums = Accumulate(rows, grad, hess);
  nodes_[id].value = -sums.g / sums.h;
  if (depth >= params.max_depth) return id;

  const Split split = FindBestSplit(X, rows, grad, hess, params.min_samples_leaf, params.min_child_weight);
  if (split.feature < 0) return id;

  std::vector<std::size_t> left_rows;
  std::vector<std::size_t> right_rows;
  for (std::size_t r : rows) {
    (X(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();

  nodes_[id].feature = split.feature;
  nodes_[id].threshold = split.threshold;
  const int left = Grow(X, left_rows, grad, hess, params, depth + 1);
  const int right = Grow(X, right_rows, grad, hess, params, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double RegressionTree::Predict(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                " entries, tree expects " + std::to_string(num_features_));
  }
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& n = nodes_[id];
    id = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[id].value;
}

void RegressionTree::ScaleLeaves(double factor) {
  for (Node& n : nodes_) n.value *= factor;
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

}  // namespace tune
