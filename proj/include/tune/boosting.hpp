// Newton boosting of regression trees for an arbitrary per-row loss.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tune/tree.hpp"

namespace tune {

struct GradHess {
  double grad = 0.0;
  double hess = 0.0;
};

// Per-row loss in terms of the model margin.
class RowLoss {
 public:
  virtual ~RowLoss() = default;
  virtual double Loss(std::size_t row, double margin) const = 0;
  virtual GradHess Derivatives(std::size_t row, double margin) const = 0;
};

struct BoostParams {
  double learning_rate = 0.3;
  int num_rounds = 20;
  TreeParams tree{6, 1};
  double subsample = 1.0;  // row fraction per round, drawn without replacement
  std::uint64_t seed = 0;

  void Validate() const;
};

class BoostedTrees {
 public:
  BoostedTrees() = default;
  BoostedTrees(double base_score, std::vector<RegressionTree> trees, std::size_t num_features);

  // base_score + sum of tree outputs (leaves already carry the step size).
  double PredictMargin(std::span<const double> x) const;

  double base_score() const { return base_score_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t num_features() const { return num_features_; }

 private:
  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::size_t num_features_ = 0;
};

// Each round grows one tree on the (gradient, hessian) pairs at the current
// margins with leaf value -G/H, scales it by the learning rate, then halves
// the step until the total training loss does not increase. `loss_trace`,
// when given, receives the total loss before the first round and after each
// round.
BoostedTrees FitBoosted(const FeatureMatrix& X, double base_score, const RowLoss& loss,
                        const BoostParams& params, std::vector<double>* loss_trace = nullptr);

// Plain squared-error boosting; base score is the mean response.
BoostedTrees FitSquaredError(const FeatureMatrix& X, std::span<const double> y,
                             const BoostParams& params);

}  // namespace tune
