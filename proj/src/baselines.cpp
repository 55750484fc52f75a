#include "tune/baselines.hpp"

#include <stdexcept>

#include "tune/config_space.hpp"

namespace tune {

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kRandom:
      return "rs";
    case Method::kBo:
      return "bo";
    case Method::kBoStatic:
      return "bo-st";
    case Method::kBoTruncate:
      return "bo-tc";
    case Method::kBoStandardGbt:
      return "bo-gb";
    case Method::kCensored:
      return "cello";
  }
  return "?";
}

Method ParseMethod(std::string_view name) {
  for (Method m : AllMethods()) {
    if (MethodName(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected rs, bo, bo-st, bo-tc, bo-gb or cello)");
}

const std::vector<Method>& AllMethods() {
  static const std::vector<Method> kAll = {Method::kRandom,     Method::kBo,
                                           Method::kBoStatic,   Method::kBoTruncate,
                                           Method::kBoStandardGbt, Method::kCensored};
  return kAll;
}

std::size_t RandomStep(const std::vector<bool>& sampled, Rng& rng) {
  std::vector<std::size_t> open;
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    if (!sampled[k]) open.push_back(k);
  }
  if (open.empty()) throw PoolExhaustedError("every candidate has been sampled");
  return open[UniformIndex(rng, open.size())];
}

double StandardGbtPredict(const FeatureMatrix& X_finished, std::span<const double> y_finished,
                          std::span<const double> x, const BoostParams& params) {
  return FitSquaredError(X_finished, y_finished, params).PredictMargin(x);
}

}  // namespace tune
