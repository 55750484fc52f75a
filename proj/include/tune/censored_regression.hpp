// Gradient-boosted accelerated-failure-time regression.
//
// The model lives in log space: log z = g(x) + scale * eps, where eps follows
// the chosen noise distribution. Finished samples contribute a density term
// to the negative log-likelihood; a still-running sample contributes the
// survival probability beyond its elapsed value, which pushes g(x) above the
// log of that value.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tune/boosting.hpp"

namespace tune {

enum class NoiseDistribution { kNormal, kExtreme };

struct CensoredSample {
  std::vector<double> features;
  double value = 0.0;     // final value, or the elapsed value when censored
  bool censored = false;  // true: the true value is known to be >= value
};

struct AftParams {
  NoiseDistribution distribution = NoiseDistribution::kExtreme;
  double distribution_scale = 0.3;
  double learning_rate = 0.25;
  int num_boost_round = 20;
  int max_depth = 6;
  int min_samples_leaf = 1;
  double min_child_weight = 1.0;
  // Initial margin in log space; derived from the training data when unset.
  std::optional<double> base_score;

  void Validate() const;
};

// Lower bound applied to every hessian.
inline constexpr double kAftHessianFloor = 1e-6;

// Per-sample negative log-likelihood at margin g.
double AftNll(double g, double value, bool censored, NoiseDistribution dist, double scale);
// d/dg and d^2/dg^2 of AftNll; hessian floored at kAftHessianFloor.
GradHess AftGradHess(double g, double value, bool censored, NoiseDistribution dist, double scale);

class AftModel {
 public:
  AftModel() = default;
  AftModel(BoostedTrees trees, AftParams params);

  double PredictLog(std::span<const double> x) const { return trees_.PredictMargin(x); }
  // exp(g(x)), in the units of the training values.
  double PredictFinal(std::span<const double> x) const;

  double base_score() const { return trees_.base_score(); }
  std::size_t num_trees() const { return trees_.trees().size(); }
  const AftParams& params() const { return params_; }

 private:
  BoostedTrees trees_;
  AftParams params_;
};

// Unless params.base_score is set, the initial margin is the mean log value
// of the uncensored samples, or of the censored thresholds when there are
// none. `nll_trace` receives the training NLL before and after every round.
AftModel FitCensored(std::span<const CensoredSample> uncensored,
                     std::span<const CensoredSample> censored, const AftParams& params,
                     std::uint64_t seed = 0, std::vector<double>* nll_trace = nullptr);

struct AftGrid {
  std::vector<double> scales{0.2, 0.3, 0.4};
  std::vector<double> learning_rates{0.2, 0.25, 0.3};
};

// Picks (distribution_scale, learning_rate) from the grid by leave-one-out
// NLL over the uncensored samples. With fewer than four samples the grid
// midpoints are used. Other fields are copied from `base`.
AftParams SelectAftParams(std::span<const CensoredSample> uncensored, const AftParams& base,
                          const AftGrid& grid = {});

}  // namespace tune
