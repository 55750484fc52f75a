// Experiment driver: constraints from trace percentiles, brute-force optima,
// relative error, synthetic traces and method x constraint x seed sweeps.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tune/baselines.hpp"
#include "tune/execution.hpp"
#include "tune/optimizer.hpp"

namespace tune {

// |predicted - optimal| / |optimal|; throws std::invalid_argument when
// optimal == 0.
double RelativeError(double predicted, double optimal);

// pct-th percentile (0..100) with linear interpolation between order
// statistics: rank = pct/100 * (n - 1).
double Percentile(std::vector<double> values, double pct);

double ConstraintFromPercentile(const WorkloadTrace& trace, ConstraintMetric metric, double pct);

struct OracleResult {
  double value = 0.0;
  std::size_t row = 0;
};

// Minimum objective over rows meeting the constraint (first row wins ties).
std::optional<OracleResult> OracleOptimum(const WorkloadTrace& trace, Objective objective,
                                          ConstraintMetric metric, double constraint);

// Problem kind by CLI name: "lup" (latency under power) or "eul" (energy
// under latency).
Problem MakeProblem(const std::string& kind, double constraint, double budget_s);

// Seeded synthetic workload. Latency is a product of hardware speed terms
// (cpu.freq, uncore.freq, hyperthreading, n.sockets, n.cores when present),
// per-parameter quadratic effects with random optima, random pairwise
// interactions, a memory-pressure cliff and log-normal noise. Power grows
// with active cores and frequency. Parameters the model does not recognize
// get generic effects.
struct SyntheticTraceParams {
  double base_latency_s = 12.0;
  double latency_noise = 0.05;  // log-space std
  double power_noise = 0.03;
  double effect_weight_max = 0.35;
  int interaction_pairs = 6;
  double interaction_weight = 0.3;
  double cliff_factor = 1.8;
};

WorkloadTrace GenerateSyntheticTrace(const ConfigSpace& space, std::size_t rows, std::uint64_t seed,
                                     const SyntheticTraceParams& params = {});

struct ResultRow {
  std::string workload;
  Method method = Method::kCensored;
  std::string problem;
  double percentile = 0.0;
  double budget_s = 0.0;
  std::uint64_t seed = 0;
  double constraint = 0.0;
  std::optional<double> y_opt;
  std::optional<double> best_value;
  std::optional<double> relative_error;
  int rounds = 0;
  int samples_completed = 0;
  int samples_terminated = 0;
  double consumed_s = 0.0;
  double overhead_s = 0.0;  // wall-clock; written to the timing file only
};

// Runs one search and scores it against the oracle.
ResultRow RunCell(const std::string& workload, const WorkloadTrace& trace, const std::string& problem,
                  double percentile, double budget_s, Method method, std::uint64_t seed,
                  double interval_s, const SearchOptions& base_options = {},
                  SearchResult* search_out = nullptr);

struct WorkloadSpec {
  std::string name;
  std::filesystem::path trace;
  std::filesystem::path space;  // empty: built-in Spark cluster space
};

struct ExperimentPlan {
  std::vector<WorkloadSpec> workloads;
  std::vector<std::string> problems{"lup", "eul"};
  std::vector<double> percentiles{10, 20, 30, 40, 50, 60, 70, 80, 90};
  // Absolute budgets in seconds; when empty, budget_multipliers times the
  // trace's median latency.
  std::vector<double> budgets;
  std::vector<double> budget_multipliers{5, 10, 20, 40};
  std::vector<Method> methods{Method::kRandom, Method::kBo, Method::kBoStatic,
                              Method::kBoTruncate, Method::kBoStandardGbt, Method::kCensored};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double interval_s = 5.0;
  int threads = 1;

  void Validate() const;
};

// Plan files are JSON with the field names above; "methods" and "problems"
// use CLI spellings. Relative trace/space paths resolve against `base_dir`.
ExperimentPlan ParsePlanJson(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentPlan LoadPlan(const std::filesystem::path& path);

// Seed of one sweep cell, shared by all methods so they see the same
// initial sample and tie-breaking stream.
std::uint64_t CellSeed(std::uint64_t base_seed, const std::string& workload,
                       const std::string& problem, double percentile, double budget_s);

// One row per (workload, problem, percentile, budget, method, seed), sorted
// in that order.
std::vector<ResultRow> RunPlan(const ExperimentPlan& plan);

struct SummaryRow {
  std::string workload;
  Method method = Method::kCensored;
  std::string problem;
  int cells = 0;
  int found = 0;  // cells with a feasible result
  double mean_relative_error = 0.0;  // over cells with a result
  double mean_best_value = 0.0;
  double mean_rounds = 0.0;
  double mean_samples_completed = 0.0;
  double mean_samples_terminated = 0.0;
};

std::vector<SummaryRow> Summarize(const std::vector<ResultRow>& rows);

// Results CSV: a '#' metadata line, the header, one line per row, then one
// summary line per (workload, method, problem) with seed column "mean".
void WriteResultsCsv(const std::vector<ResultRow>& rows, const std::string& metadata,
                     std::ostream& out);
// Wall-clock overhead per row (not deterministic, kept apart from results).
void WriteTimingCsv(const std::vector<ResultRow>& rows, std::ostream& out);

}  // namespace tune
