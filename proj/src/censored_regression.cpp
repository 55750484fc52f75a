#include "tune/censored_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tune {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
// Beyond this z the normal tail is evaluated through the Mills ratio.
constexpr double kNormalTailSwitch = 5.0;
// exp() argument clamp for the extreme distribution.
constexpr double kMaxExp = 700.0;

void CheckInputs(double value, double scale) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("AFT value must be positive and finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("AFT distribution scale must be positive");
  }
}

// S(z) / phi(z) for z > kNormalTailSwitch, by the Laplace continued fraction.
double MillsRatioTail(double z) {
  double f = z;
  for (int k = 40; k >= 1; --k) f = z + k / f;
  return 1.0 / f;
}

// -log S(z) and the hazard phi(z) / S(z) for the standard normal.
struct NormalTail {
  double neg_log_survival;
  double hazard;
};

NormalTail NormalSurvival(double z) {
  if (z > kNormalTailSwitch) {
    const double r = MillsRatioTail(z);
    return {0.5 * z * z + kHalfLog2Pi - std::log(r), 1.0 / r};
  }
  const double s = 0.5 * std::erfc(z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z - kHalfLog2Pi);
  return {-std::log(s), pdf / s};
}

double ClampedExp(double z) { return std::exp(std::min(z, kMaxExp)); }

class AftLoss final : public RowLoss {
 public:
  AftLoss(std::span<const double> values, std::span<const char> censored, NoiseDistribution dist,
          double scale)
      : values_(values), censored_(censored), dist_(dist), scale_(scale) {}

  double Loss(std::size_t row, double margin) const override {
    return AftNll(margin, values_[row], censored_[row] != 0, dist_, scale_);
  }
  GradHess Derivatives(std::size_t row, double margin) const override {
    return AftGradHess(margin, values_[row], censored_[row] != 0, dist_, scale_);
  }

 private:
  std::span<const double> values_;
  std::span<const char> censored_;
  NoiseDistribution dist_;
  double scale_;
};

double Midpoint(const std::vector<double>& grid, double fallback) {
  if (grid.empty()) return fallback;
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  return sorted[(sorted.size() - 1) / 2];
}

}  // namespace

void AftParams::Validate() const {
  if (!(distribution_scale > 0.0)) throw std::invalid_argument("distribution_scale must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (num_boost_round < 1) throw std::invalid_argument("num_boost_round must be at least 1");
  if (max_depth < 1) throw std::invalid_argument("AFT max_depth must be at least 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("AFT min_samples_leaf must be at least 1");
  if (!(min_child_weight >= 0.0)) throw std::invalid_argument("AFT min_child_weight must be non-negative");
}

double AftNll(double g, double value, bool censored, NoiseDistribution dist, double scale) {
  CheckInputs(value, scale);
  const double z = (std::log(value) - g) / scale;
  if (dist == NoiseDistribution::kNormal) {
    if (censored) return NormalSurvival(z).neg_log_survival;
    return std::log(value * scale) + kHalfLog2Pi + 0.5 * z * z;
  }
  // Extreme (Gumbel-min): f(z) = e^z exp(-e^z), S(z) = exp(-e^z).
  if (censored) return ClampedExp(z);
  return std::log(value * scale) - z + ClampedExp(z);
}

GradHess AftGradHess(double g, double value, bool censored, NoiseDistribution dist, double scale) {
  CheckInputs(value, scale);
  const double z = (std::log(value) - g) / scale;
  const double inv_s = 1.0 / scale;
  GradHess d;
  if (dist == NoiseDistribution::kNormal) {
    if (censored) {
      const double hazard = NormalSurvival(z).hazard;
      d.grad = -hazard * inv_s;
      d.hess = hazard * (hazard - z) * inv_s * inv_s;
    } else {
      d.grad = -z * inv_s;
      d.hess = inv_s * inv_s;
    }
  } else {
    const double ez = ClampedExp(z);
    d.grad = censored ? -ez * inv_s : (1.0 - ez) * inv_s;
    d.hess = ez * inv_s * inv_s;
  }
  d.hess = std::max(d.hess, kAftHessianFloor);
  return d;
}

AftModel::AftModel(BoostedTrees trees, AftParams params)
    : trees_(std::move(trees)), params_(std::move(params)) {}

double AftModel::PredictFinal(std::span<const double> x) const {
  return std::exp(std::clamp(PredictLog(x), -kMaxExp, kMaxExp));
}

AftModel FitCensored(std::span<const CensoredSample> uncensored,
                     std::span<const CensoredSample> censored, const AftParams& params,
                     std::uint64_t seed, std::vector<double>* nll_trace) {
  params.Validate();
  if (uncensored.empty() && censored.empty()) {
    throw std::invalid_argument("censored regression needs at least one sample");
  }
  FeatureMatrix X;
  std::vector<double> values;
  std::vector<char> flags;
  auto add = [&](const CensoredSample& s, bool is_censored) {
    CheckInputs(s.value, params.distribution_scale);
    X.AppendRow(s.features);
    values.push_back(s.value);
    flags.push_back(is_censored ? 1 : 0);
  };
  for (const auto& s : uncensored) add(s, false);
  for (const auto& s : censored) add(s, true);

  double base = 0.0;
  if (params.base_score) {
    base = *params.base_score;
  } else {
    const auto& source = uncensored.empty() ? censored : uncensored;
    for (const auto& s : source) base += std::log(s.value);
    base /= static_cast<double>(source.size());
  }

  BoostParams boost;
  boost.learning_rate = params.learning_rate;
  boost.num_rounds = params.num_boost_round;
  boost.tree = TreeParams{params.max_depth, params.min_samples_leaf, params.min_child_weight};
  boost.seed = seed;
  AftLoss loss(values, flags, params.distribution, params.distribution_scale);
  return AftModel(FitBoosted(X, base, loss, boost, nll_trace), params);
}

AftParams SelectAftParams(std::span<const CensoredSample> uncensored, const AftParams& base,
                          const AftGrid& grid) {
  AftParams chosen = base;
  if (uncensored.size() < 4 || grid.scales.empty() || grid.learning_rates.empty()) {
    chosen.distribution_scale = Midpoint(grid.scales, base.distribution_scale);
    chosen.learning_rate = Midpoint(grid.learning_rates, base.learning_rate);
    return chosen;
  }
  double best_nll = std::numeric_limits<double>::infinity();
  std::vector<CensoredSample> train;
  train.reserve(uncensored.size() - 1);
  for (double scale : grid.scales) {
    for (double lr : grid.learning_rates) {
      AftParams trial = base;
      trial.distribution_scale = scale;
      trial.learning_rate = lr;
      double nll = 0.0;
      for (std::size_t held = 0; held < uncensored.size(); ++held) {
        train.clear();
        for (std::size_t i = 0; i < uncensored.size(); ++i) {
          if (i != held) train.push_back(uncensored[i]);
        }
        const AftModel model = FitCensored(train, {}, trial);
        nll += AftNll(model.PredictLog(uncensored[held].features), uncensored[held].value, false,
                      trial.distribution, scale);
      }
      if (nll < best_nll) {
        best_nll = nll;
        chosen = trial;
      }
    }
  }
  return chosen;
}

}  // namespace tune
