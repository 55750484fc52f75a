// The search loop: forest-surrogate Bayesian optimization with interval
// monitoring and optional early termination of running samples.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "tune/baselines.hpp"
#include "tune/censored_regression.hpp"
#include "tune/config_space.hpp"
#include "tune/execution.hpp"
#include "tune/forest.hpp"

namespace tune {

enum class Objective { kLatency, kEnergy };
enum class ConstraintMetric { kPower, kLatency };

struct Problem {
  Objective objective = Objective::kLatency;
  ConstraintMetric constraint_metric = ConstraintMetric::kPower;
  double constraint = 0.0;  // upper bound C in units of the metric
  double budget_s = 0.0;

  // Minimize latency subject to average power <= max_power_w.
  static Problem LatencyUnderPower(double max_power_w, double budget_s);
  // Minimize energy subject to latency <= max_latency_s.
  static Problem EnergyUnderLatency(double max_latency_s, double budget_s);

  void Validate() const;

  double ObjectiveOf(double latency, double energy) const;
  double ConstraintOf(double latency, double energy) const;
  // The monitored quantity of a running sample (elapsed latency or energy).
  double Measured(const BehaviorReading& reading) const;
};

// "lup" / "eul".
std::string_view ProblemName(const Problem& problem);

enum class Outcome { kFeasible, kInfeasible, kTerminated };
std::string_view OutcomeName(Outcome outcome);

struct RoundRecord {
  int round = 0;
  std::size_t candidate = 0;
  Outcome outcome = Outcome::kTerminated;
  double consumed_s = 0.0;
  int intervals = 0;                  // polls issued
  std::vector<double> predictions;    // per-interval predicted final values
  std::optional<double> gamma;        // termination threshold in force
  double budget_remaining = 0.0;      // after charging this round
  double overhead_s = 0.0;            // model fitting and scoring time
  std::optional<double> objective;    // finished runs only
  std::optional<double> constraint;
};

// Training set, best-so-far and budget clock of one search.
class SearchState {
 public:
  explicit SearchState(double budget_s, double penalty_factor = 10.0);

  // Appends a finished sample. Feasible samples keep their objective;
  // infeasible ones get penalty_factor times the largest objective observed
  // so far (this one included), fixed at insertion.
  void AddFinished(std::span<const double> features, double objective, double constraint_value,
                   double constraint_limit);

  // Minimum objective over feasible entries; absent until one exists.
  std::optional<double> gamma() const { return gamma_; }

  const FeatureMatrix& X() const { return X_; }
  const std::vector<double>& Y() const { return Y_; }
  const std::vector<bool>& feasible() const { return feasible_; }
  std::size_t size() const { return Y_.size(); }

  double budget_remaining() const { return budget_remaining_; }
  void Charge(double seconds) { budget_remaining_ -= seconds; }

  double max_observed() const { return max_observed_; }

 private:
  FeatureMatrix X_;
  std::vector<double> Y_;
  std::vector<bool> feasible_;
  std::optional<double> gamma_;
  double budget_remaining_;
  double penalty_factor_;
  double max_observed_ = 0.0;
};

enum class TimeMode {
  kVirtual,    // only run time is charged; fitting overhead reported separately
  kWallClock,  // run time and fitting overhead are both charged
};

struct SearchOptions {
  Method method = Method::kCensored;
  ForestParams forest;
  AftParams aft;
  bool select_aft_params = true;  // leave-one-out grid search per training set
  AftGrid aft_grid;
  BoostParams standard_gbt{0.3, 20, TreeParams{6, 1}, 1.0, 0};
  double penalty_factor = 10.0;
  TimeMode time_mode = TimeMode::kVirtual;
  std::optional<double> static_threshold;  // bo-st; defaults to the initial sample
  std::optional<std::size_t> initial_candidate;  // pool index of the first run; random when unset
};

struct SearchResult {
  std::optional<std::size_t> best_candidate;
  std::optional<Configuration> best_config;
  std::optional<double> best_value;
  int rounds = 0;  // runs started, initial sample included
  int samples_completed = 0;
  int samples_terminated = 0;
  bool pool_exhausted = false;
  double consumed_s = 0.0;  // run time over all rounds
  double overhead_s = 0.0;  // fitting/scoring time over all rounds
  double budget_remaining = 0.0;
  std::size_t training_size = 0;
  std::vector<RoundRecord> history;
};

SearchResult RunSearch(const Problem& problem, const ConfigSpace& space,
                       std::span<const Configuration> pool, Executor& executor,
                       const SearchOptions& options, std::uint64_t seed);

// One JSON object per round.
void WriteHistoryJsonl(const SearchResult& result, std::ostream& out);

}  // namespace tune
