#include "tune/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "tune/acquisition.hpp"
#include "tune/random.hpp"

namespace tune {

Problem Problem::LatencyUnderPower(double max_power_w, double budget_s) {
  Problem p{Objective::kLatency, ConstraintMetric::kPower, max_power_w, budget_s};
  p.Validate();
  return p;
}

Problem Problem::EnergyUnderLatency(double max_latency_s, double budget_s) {
  Problem p{Objective::kEnergy, ConstraintMetric::kLatency, max_latency_s, budget_s};
  p.Validate();
  return p;
}

void Problem::Validate() const {
  const bool lup = objective == Objective::kLatency && constraint_metric == ConstraintMetric::kPower;
  const bool eul = objective == Objective::kEnergy && constraint_metric == ConstraintMetric::kLatency;
  if (!lup && !eul) {
    throw std::invalid_argument("problem must pair latency with a power constraint or energy with a latency constraint");
  }
  if (!(constraint > 0.0)) throw std::invalid_argument("constraint value must be positive");
  if (!(budget_s > 0.0)) throw std::invalid_argument("time budget must be positive");
}

double Problem::ObjectiveOf(double latency, double energy) const {
  return objective == Objective::kLatency ? latency : energy;
}

double Problem::ConstraintOf(double latency, double energy) const {
  return constraint_metric == ConstraintMetric::kPower ? energy / latency : latency;
}

double Problem::Measured(const BehaviorReading& reading) const {
  return objective == Objective::kLatency ? reading.elapsed_latency : reading.elapsed_energy;
}

std::string_view ProblemName(const Problem& problem) {
  return problem.objective == Objective::kLatency ? "lup" : "eul";
}

std::string_view OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kFeasible:
      return "finished-feasible";
    case Outcome::kInfeasible:
      return "finished-infeasible";
    case Outcome::kTerminated:
      return "terminated";
  }
  return "?";
}

SearchState::SearchState(double budget_s, double penalty_factor)
    : budget_remaining_(budget_s), penalty_factor_(penalty_factor) {}

void SearchState::AddFinished(std::span<const double> features, double objective,
                              double constraint_value, double constraint_limit) {
  max_observed_ = Y_.empty() ? objective : std::max(max_observed_, objective);
  const bool ok = constraint_value <= constraint_limit;
  X_.AppendRow(features);
  Y_.push_back(ok ? objective : penalty_factor_ * max_observed_);
  feasible_.push_back(ok);
  if (ok) gamma_ = gamma_ ? std::min(*gamma_, objective) : objective;
}

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

// Models whose inputs only change when a run finishes are cached on the
// training-set size.
class Search {
 public:
  Search(const Problem& problem, const ConfigSpace& space, std::span<const Configuration> pool,
         Executor& executor, const SearchOptions& options, std::uint64_t seed)
      : problem_(problem),
        pool_(pool),
        executor_(executor),
        options_(options),
        seed_(seed),
        state_(problem.budget_s, options.penalty_factor),
        sampled_(pool.size(), false),
        rng_(DeriveSeed(seed, {HashString("search")})) {
    for (const auto& c : pool) encoded_.AppendRow(Encode(space, c));
  }

  SearchResult Run() {
    const std::size_t first = options_.initial_candidate.value_or(UniformIndex(rng_, pool_.size()));
    RunCandidate(first, /*allow_termination=*/false, 0.0);
    while (state_.budget_remaining() > 0.0) {
      if (std::find(sampled_.begin(), sampled_.end(), false) == sampled_.end()) {
        result_.pool_exhausted = true;
        break;
      }
      const auto t0 = Clock::now();
      const std::size_t next = options_.method == Method::kRandom ? RandomStep(sampled_, rng_)
                                                                  : SelectByAcquisition();
      RunCandidate(next, /*allow_termination=*/true, Seconds(Clock::now() - t0));
    }
    Finish();
    return std::move(result_);
  }

 private:
  std::size_t SelectByAcquisition() {
    if (scores_size_ != state_.size()) {
      ForestParams fp = options_.forest;
      fp.seed = DeriveSeed(seed_, {HashString("forest"), state_.size()});
      const ForestModel model = FitForest(state_.X(), state_.Y(), fp);
      const double best = state_.gamma().value_or(
          *std::min_element(state_.Y().begin(), state_.Y().end()));
      scores_.assign(pool_.size(), 0.0);
      for (std::size_t k = 0; k < pool_.size(); ++k) {
        if (sampled_[k]) continue;
        const MeanStd pred = PredictMeanStd(model, encoded_.row(k));
        scores_[k] = ExpectedImprovement(pred.mean, pred.std, best);
      }
      scores_size_ = state_.size();
    }
    return SelectFromScores(scores_, sampled_);
  }

  bool TerminationEnabled() const {
    switch (options_.method) {
      case Method::kRandom:
      case Method::kBo:
        return false;
      default:
        return true;
    }
  }

  // Returns the prediction for bo-gb / cello, nullopt for measured rules.
  // Sets `stop` when the run should be terminated now.
  std::optional<double> CheckInterval(std::size_t candidate, const BehaviorReading& reading,
                                      const std::optional<double>& gamma, bool& stop) {
    const double measured = problem_.Measured(reading);
    stop = false;
    switch (options_.method) {
      case Method::kBoStatic:
        stop = static_threshold_ && StaticThresholdCheck(measured, *static_threshold_);
        return std::nullopt;
      case Method::kBoTruncate:
        stop = gamma && TruncationCheck(measured, *gamma);
        return std::nullopt;
      case Method::kBoStandardGbt: {
        if (!gamma) return std::nullopt;
        if (gbt_size_ != state_.size()) {
          BoostParams bp = options_.standard_gbt;
          bp.seed = DeriveSeed(seed_, {HashString("gbt"), state_.size()});
          gbt_ = FitSquaredError(state_.X(), state_.Y(), bp);
          gbt_size_ = state_.size();
        }
        const double pred = gbt_.PredictMargin(encoded_.row(candidate));
        stop = ShouldTerminate(pred, *gamma);
        return pred;
      }
      case Method::kCensored: {
        if (!gamma || !(measured > 0.0)) return std::nullopt;
        if (aft_size_ != state_.size()) {
          uncensored_.clear();
          for (std::size_t i = 0; i < state_.size(); ++i) {
            const auto row = state_.X().row(i);
            uncensored_.push_back({{row.begin(), row.end()}, state_.Y()[i], false});
          }
          aft_params_ = options_.select_aft_params
                            ? SelectAftParams(uncensored_, options_.aft, options_.aft_grid)
                            : options_.aft;
          aft_size_ = state_.size();
        }
        const auto row = encoded_.row(candidate);
        const CensoredSample running{{row.begin(), row.end()}, measured, true};
        const AftModel model =
            FitCensored(uncensored_, std::span(&running, 1), aft_params_,
                        DeriveSeed(seed_, {HashString("aft"), state_.size()}));
        const double pred = model.PredictFinal(row);
        stop = ShouldTerminate(pred, *gamma);
        return pred;
      }
      default:
        return std::nullopt;
    }
  }

  void RunCandidate(std::size_t k, bool allow_termination, double selection_overhead) {
    sampled_[k] = true;
    RoundRecord rec;
    rec.round = result_.rounds++;
    rec.candidate = k;
    rec.overhead_s = selection_overhead;
    const std::optional<double> gamma = state_.gamma();
    rec.gamma = gamma;

    const RunHandle handle = executor_.Start(pool_[k]);
    const bool check = allow_termination && TerminationEnabled();
    for (int t = 1;; ++t) {
      const BehaviorReading reading = executor_.Poll(handle, t);
      rec.intervals = t;
      if (reading.finished) {
        const double latency = *reading.final_latency;
        const double energy = *reading.final_energy;
        rec.consumed_s = executor_.ConsumedTime(handle);
        rec.objective = problem_.ObjectiveOf(latency, energy);
        rec.constraint = problem_.ConstraintOf(latency, energy);
        const bool feasible = *rec.constraint <= problem_.constraint;
        rec.outcome = feasible ? Outcome::kFeasible : Outcome::kInfeasible;
        state_.AddFinished(encoded_.row(k), *rec.objective, *rec.constraint, problem_.constraint);
        if (!static_threshold_) {
          static_threshold_ = options_.static_threshold.value_or(*rec.objective);
        }
        ++result_.samples_completed;
        break;
      }
      if (!check) continue;
      bool stop = false;
      const auto t0 = Clock::now();
      const std::optional<double> pred = CheckInterval(k, reading, gamma, stop);
      rec.overhead_s += Seconds(Clock::now() - t0);
      if (pred) rec.predictions.push_back(*pred);
      if (stop) {
        rec.consumed_s = executor_.Terminate(handle);
        rec.outcome = Outcome::kTerminated;
        ++result_.samples_terminated;
        break;
      }
    }
    state_.Charge(rec.consumed_s);
    if (options_.time_mode == TimeMode::kWallClock) state_.Charge(rec.overhead_s);
    result_.consumed_s += rec.consumed_s;
    result_.overhead_s += rec.overhead_s;
    rec.budget_remaining = state_.budget_remaining();
    result_.history.push_back(std::move(rec));
  }

  void Finish() {
    result_.budget_remaining = state_.budget_remaining();
    result_.training_size = state_.size();
    // Best feasible run; earliest round wins ties.
    for (const auto& rec : result_.history) {
      if (rec.outcome != Outcome::kFeasible) continue;
      if (!result_.best_value || *rec.objective < *result_.best_value) {
        result_.best_value = rec.objective;
        result_.best_candidate = rec.candidate;
      }
    }
    if (result_.best_candidate) result_.best_config = pool_[*result_.best_candidate];
  }

  const Problem& problem_;
  std::span<const Configuration> pool_;
  Executor& executor_;
  const SearchOptions& options_;
  std::uint64_t seed_;

  SearchState state_;
  FeatureMatrix encoded_;
  std::vector<bool> sampled_;
  Rng rng_;
  SearchResult result_;
  std::optional<double> static_threshold_;

  std::vector<double> scores_;
  std::size_t scores_size_ = std::numeric_limits<std::size_t>::max();
  BoostedTrees gbt_;
  std::size_t gbt_size_ = std::numeric_limits<std::size_t>::max();
  std::vector<CensoredSample> uncensored_;
  AftParams aft_params_;
  std::size_t aft_size_ = std::numeric_limits<std::size_t>::max();
};

}  // namespace

SearchResult RunSearch(const Problem& problem, const ConfigSpace& space,
                       std::span<const Configuration> pool, Executor& executor,
                       const SearchOptions& options, std::uint64_t seed) {
  problem.Validate();
  if (pool.empty()) throw std::invalid_argument("candidate pool is empty");
  if (options.initial_candidate && *options.initial_candidate >= pool.size()) {
    throw std::invalid_argument("initial candidate is outside the pool");
  }
  return Search(problem, space, pool, executor, options, seed).Run();
}

void WriteHistoryJsonl(const SearchResult& result, std::ostream& out) {
  for (const auto& rec : result.history) {
    nlohmann::ordered_json j;
    j["round"] = rec.round;
    j["candidate_id"] = rec.candidate;
    j["outcome"] = OutcomeName(rec.outcome);
    j["consumed_s"] = rec.consumed_s;
    j["intervals"] = rec.intervals;
    j["predicted_values"] = rec.predictions;
    j["gamma"] = rec.gamma ? nlohmann::ordered_json(*rec.gamma) : nlohmann::ordered_json(nullptr);
    j["budget_remaining"] = rec.budget_remaining;
    if (rec.objective) j["objective"] = *rec.objective;
    if (rec.constraint) j["constraint"] = *rec.constraint;
    out << j.dump() << "\n";
  }
}

}  // namespace tune
