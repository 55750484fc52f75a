#include "tune/acquisition.hpp"

#include <cmath>
#include <numbers>

#include "tune/config_space.hpp"

namespace tune {

double NormalPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double NormalCdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double ExpectedImprovement(double mu, double sigma, double best) {
  if (!(sigma > 0.0)) return 0.0;
  const double improvement = best - mu;
  const double z = improvement / sigma;
  const double ei = improvement * NormalCdf(z) + sigma * NormalPdf(z);
  return ei > 0.0 ? ei : 0.0;
}

std::size_t SelectFromScores(std::span<const double> scores, const std::vector<bool>& sampled) {
  if (scores.size() != sampled.size()) {
    throw std::invalid_argument("score and sampled-mask lengths differ");
  }
  std::size_t best = scores.size();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (sampled[k]) continue;
    if (best == scores.size() || scores[k] > scores[best]) best = k;
  }
  if (best == scores.size()) throw PoolExhaustedError("every candidate has been sampled");
  return best;
}

std::size_t SelectNext(const ForestModel& model, const AcquisitionContext& ctx) {
  if (ctx.candidates == nullptr || ctx.sampled == nullptr) {
    throw std::invalid_argument("acquisition context is missing the candidate pool");
  }
  const FeatureMatrix& pool = *ctx.candidates;
  std::vector<double> scores(pool.rows(), 0.0);
  for (std::size_t k = 0; k < pool.rows(); ++k) {
    if ((*ctx.sampled)[k]) continue;
    const MeanStd pred = PredictMeanStd(model, pool.row(k));
    scores[k] = ExpectedImprovement(pred.mean, pred.std, ctx.best);
  }
  return SelectFromScores(scores, *ctx.sampled);
}

}  // namespace tune
