// Search-strategy variants that share the optimizer's loop.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tune/boosting.hpp"
#include "tune/random.hpp"

namespace tune {

enum class Method {
  kRandom,          // rs: uniform sampling, no model, no termination
  kBo,              // bo: forest + EI, every run completes
  kBoStatic,        // bo-st: measured termination at the initial sample's value
  kBoTruncate,      // bo-tc: measured termination at the best feasible value
  kBoStandardGbt,   // bo-gb: predicted termination, squared-error GBT on finished runs
  kCensored,        // cello: predicted termination, censored regression
};

std::string_view MethodName(Method method);
// Accepts the CLI spellings listed above; throws std::invalid_argument.
Method ParseMethod(std::string_view name);
const std::vector<Method>& AllMethods();

// Uniform choice among unsampled candidates. Throws PoolExhaustedError when
// none remain.
std::size_t RandomStep(const std::vector<bool>& sampled, Rng& rng);

// Measured termination against a fixed threshold (inclusive).
inline bool StaticThresholdCheck(double measured, double static_threshold) {
  return measured >= static_threshold;
}

// Measured termination against the best feasible value so far (inclusive).
inline bool TruncationCheck(double measured, double best) { return measured >= best; }

// Predicted-termination rule shared by bo-gb and cello.
inline bool ShouldTerminate(double prediction, double best) { return prediction >= best; }

// Standard-regression prediction used by bo-gb: a squared-error GBT trained
// on finished runs only, evaluated at x.
double StandardGbtPredict(const FeatureMatrix& X_finished, std::span<const double> y_finished,
                          std::span<const double> x, const BoostParams& params);

}  // namespace tune
