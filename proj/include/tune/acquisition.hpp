// Expected-improvement scoring and next-candidate selection.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "tune/forest.hpp"

namespace tune {

double NormalPdf(double z);
// Standard normal CDF via erfc; accurate in both tails.
double NormalCdf(double z);

// Expected improvement of a minimization objective over `best`:
//   (best - mu) * Phi(Z) + sigma * phi(Z),  Z = (best - mu) / sigma,
// and 0 when sigma == 0. The improvement is taken as best - mu so that
// lower predicted values score higher.
double ExpectedImprovement(double mu, double sigma, double best);

struct AcquisitionContext {
  double best = 0.0;  // best observed objective so far
  const FeatureMatrix* candidates = nullptr;  // encoded candidate pool
  const std::vector<bool>* sampled = nullptr;  // sampled[k] marks candidate k as used
};

// Argmax of EI over unsampled candidates; ties go to the lowest index.
// Throws PoolExhaustedError when every candidate has been sampled.
std::size_t SelectNext(const ForestModel& model, const AcquisitionContext& ctx);

// Same selection from precomputed per-candidate EI scores.
std::size_t SelectFromScores(std::span<const double> scores, const std::vector<bool>& sampled);

}  // namespace tune
