#include "tune/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tune/random.hpp"

namespace tune {

namespace {

constexpr int kMaxStepHalvings = 40;

double TotalLoss(const RowLoss& loss, std::span<const double> margins) {
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) total += loss.Loss(i, margins[i]);
  return total;
}

class SquaredErrorLoss final : public RowLoss {
 public:
  explicit SquaredErrorLoss(std::span<const double> y) : y_(y) {}
  double Loss(std::size_t row, double margin) const override {
    const double r = margin - y_[row];
    return 0.5 * r * r;
  }
  GradHess Derivatives(std::size_t row, double margin) const override {
    return {margin - y_[row], 1.0};
  }

 private:
  std::span<const double> y_;
};

}  // namespace

void BoostParams::Validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (num_rounds < 1) throw std::invalid_argument("num_boost_round must be at least 1");
  if (tree.max_depth < 1) throw std::invalid_argument("boosting max_depth must be at least 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw std::invalid_argument("subsample must lie in (0, 1]");
  }
}

BoostedTrees::BoostedTrees(double base_score, std::vector<RegressionTree> trees,
                           std::size_t num_features)
    : base_score_(base_score), trees_(std::move(trees)), num_features_(num_features) {}

double BoostedTrees::PredictMargin(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                " entries, model expects " + std::to_string(num_features_));
  }
  double m = base_score_;
  for (const auto& t : trees_) m += t.Predict(x);
  return m;
}

BoostedTrees FitBoosted(const FeatureMatrix& X, double base_score, const RowLoss& loss,
                        const BoostParams& params, std::vector<double>* loss_trace) {
  params.Validate();
  const std::size_t n = X.rows();
  if (n == 0) throw std::invalid_argument("cannot boost on an empty training set");

  std::vector<double> margins(n, base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<double> trial(n);
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  const auto subsample_n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
  Rng rng(params.seed);

  double current = TotalLoss(loss, margins);
  if (loss_trace != nullptr) loss_trace->assign(1, current);

  std::vector<RegressionTree> trees;
  trees.reserve(params.num_rounds);
  for (int round = 0; round < params.num_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const GradHess d = loss.Derivatives(i, margins[i]);
      grad[i] = d.grad;
      hess[i] = d.hess;
    }
    std::vector<std::size_t> rows = all_rows;
    if (subsample_n < n) {
      // Partial Fisher-Yates: the first subsample_n entries form the draw.
      for (std::size_t k = 0; k < subsample_n; ++k) {
        std::swap(rows[k], rows[k + UniformIndex(rng, n - k)]);
      }
      rows.resize(subsample_n);
      std::sort(rows.begin(), rows.end());
    }
    RegressionTree tree = RegressionTree::Fit(X, rows, grad, hess, params.tree);
    tree.ScaleLeaves(params.learning_rate);

    // Damped Newton: shrink the step until the training loss does not rise.
    double next = current;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxStepHalvings; ++halving) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = margins[i] + tree.Predict(X.row(i));
      next = TotalLoss(loss, trial);
      if (std::isfinite(next) && next <= current) {
        accepted = true;
        break;
      }
      tree.ScaleLeaves(0.5);
    }
    if (accepted) {
      margins.swap(trial);
      current = next;
    } else {
      tree.ScaleLeaves(0.0);
    }
    if (loss_trace != nullptr) loss_trace->push_back(current);
    trees.push_back(std::move(tree));
  }
  return BoostedTrees(base_score, std::move(trees), X.cols());
}

BoostedTrees FitSquaredError(const FeatureMatrix& X, std::span<const double> y,
                             const BoostParams& params) {
  if (y.size() != X.rows()) throw std::invalid_argument("boosting: |X| and |y| differ");
  if (y.empty()) throw std::invalid_argument("cannot boost on an empty training set");
  const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  SquaredErrorLoss loss(y);
  return FitBoosted(X, base, loss, params);
}

}  // namespace tune
