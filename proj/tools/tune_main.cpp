// tune: configuration search over recorded workload traces.
//
//   tune run --trace F --space F --problem lup --method cello --percentile 50
//            --budget 600 --interval 5 --seed 0 --out results.csv
//   tune sweep --plan plan.json --out results.csv
//   tune oracle --trace F --problem eul --percentile 30
//   tune gen-trace --seed 1 --rows 500 --out trace.csv
//   tune space > spark_space.json
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tune/harness.hpp"

namespace {

tune::ConfigSpace SpaceFrom(const std::string& path) {
  return path.empty() ? tune::SparkClusterSpace() : tune::LoadSpace(path);
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string Join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : " ") + p;
  return s;
}

struct RunArgs {
  std::string trace, space, problem = "lup", method = "cello", out, history, timing, command;
  std::string work_dir = ".";
  double percentile = 50.0, budget = 0.0, interval = 5.0, constraint = 0.0;
  std::uint64_t seed = 0;
  std::size_t pool_size = 500;
};

int Run(const RunArgs& a) {
  const tune::ConfigSpace space = SpaceFrom(a.space);
  const tune::Method method = tune::ParseMethod(a.method);

  if (!a.command.empty()) {
    // Live workload: no trace, so no percentile constraint and no oracle.
    if (!(a.constraint > 0.0)) throw std::invalid_argument("--command needs --constraint");
    const tune::Problem problem = tune::MakeProblem(a.problem, a.constraint, a.budget);
    tune::Rng pool_rng(tune::DeriveSeed(a.seed, {tune::HashString("pool")}));
    const auto pool = tune::CandidatePool(space, a.pool_size, pool_rng);
    tune::SubprocessExecutor executor(space, a.command, a.interval, a.work_dir);
    tune::SearchOptions options;
    options.method = method;
    options.time_mode = tune::TimeMode::kWallClock;
    const tune::SearchResult result = tune::RunSearch(problem, space, pool, executor, options, a.seed);
    if (!a.history.empty()) {
      auto h = OpenOut(a.history);
      tune::WriteHistoryJsonl(result, h);
    }
    if (!result.best_config) {
      std::cout << "no feasible configuration found\n";
      return 0;
    }
    std::cout << "best " << tune::FormatValue(*result.best_value) << "\n";
    for (std::size_t j = 0; j < space.size(); ++j) {
      std::cout << "  " << space.param(j).name << " = "
                << tune::FormatValue(result.best_config->values[j]) << "\n";
    }
    return 0;
  }

  if (a.trace.empty()) throw std::invalid_argument("run needs --trace or --command");
  if (!std::filesystem::exists(a.trace)) throw std::runtime_error("trace file not found: " + a.trace);
  const tune::WorkloadTrace trace = tune::LoadTrace(space, a.trace);
  const std::string workload = std::filesystem::path(a.trace).stem().string();
  tune::SearchResult search;
  const tune::ResultRow row = tune::RunCell(workload, trace, a.problem, a.percentile, a.budget,
                                            method, a.seed, a.interval, {}, &search);
  std::ostringstream meta;
  meta << "tune run trace=" << workload << " problem=" << a.problem << " method=" << a.method
       << " percentile=" << tune::FormatValue(a.percentile)
       << " budget_s=" << tune::FormatValue(a.budget)
       << " interval_s=" << tune::FormatValue(a.interval) << " seed=" << a.seed;
  if (a.out.empty()) {
    tune::WriteResultsCsv({row}, meta.str(), std::cout);
  } else {
    auto out = OpenOut(a.out);
    tune::WriteResultsCsv({row}, meta.str(), out);
  }
  if (!a.history.empty()) {
    auto h = OpenOut(a.history);
    tune::WriteHistoryJsonl(search, h);
  }
  if (!a.timing.empty()) {
    auto t = OpenOut(a.timing);
    tune::WriteTimingCsv({row}, t);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Configuration search with predictive early termination"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one search against a trace or a live command");
  run_cmd->add_option("--trace", run.trace, "Workload trace CSV");
  run_cmd->add_option("--space", run.space, "Config-space JSON (default: built-in Spark space)");
  run_cmd->add_option("--problem", run.problem, "lup or eul")->check(CLI::IsMember({"lup", "eul"}));
  run_cmd->add_option("--method", run.method, "rs, bo, bo-st, bo-tc, bo-gb or cello")
      ->check(CLI::IsMember({"rs", "bo", "bo-st", "bo-tc", "bo-gb", "cello"}));
  run_cmd->add_option("--percentile", run.percentile, "Constraint percentile over the trace");
  run_cmd->add_option("--budget", run.budget, "Time budget in seconds")->required();
  run_cmd->add_option("--interval", run.interval, "Monitoring interval in seconds");
  run_cmd->add_option("--seed", run.seed, "Random seed");
  run_cmd->add_option("--out", run.out, "Results CSV (default: stdout)");
  run_cmd->add_option("--history", run.history, "Per-round history as JSON lines");
  run_cmd->add_option("--timing", run.timing, "Wall-clock overhead CSV");
  run_cmd->add_option("--command", run.command, "Shell command template for live runs");
  run_cmd->add_option("--constraint", run.constraint, "Absolute constraint for live runs");
  run_cmd->add_option("--pool-size", run.pool_size, "Candidate pool size for live runs");
  run_cmd->add_option("--work-dir", run.work_dir, "Scratch directory for live runs");

  std::string plan_path, sweep_out, sweep_timing;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment plan");
  sweep_cmd->add_option("--plan", plan_path, "Plan JSON")->required();
  sweep_cmd->add_option("--out", sweep_out, "Results CSV")->required();
  sweep_cmd->add_option("--timing", sweep_timing, "Wall-clock overhead CSV");

  std::string oracle_trace, oracle_space, oracle_problem = "lup";
  double oracle_pct = 50.0;
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force optimum over a trace");
  oracle_cmd->add_option("--trace", oracle_trace, "Workload trace CSV")->required();
  oracle_cmd->add_option("--space", oracle_space, "Config-space JSON");
  oracle_cmd->add_option("--problem", oracle_problem, "lup or eul")
      ->check(CLI::IsMember({"lup", "eul"}));
  oracle_cmd->add_option("--percentile", oracle_pct, "Constraint percentile");

  std::uint64_t gen_seed = 0;
  std::size_t gen_rows = 500;
  std::string gen_out, gen_space;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Write a seeded synthetic trace");
  gen_cmd->add_option("--seed", gen_seed, "Random seed");
  gen_cmd->add_option("--rows", gen_rows, "Number of configurations");
  gen_cmd->add_option("--space", gen_space, "Config-space JSON");
  gen_cmd->add_option("--out", gen_out, "Trace CSV")->required();

  auto* space_cmd = app.add_subcommand("space", "Print the built-in config space as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return Run(run);
    if (*sweep_cmd) {
      const tune::ExperimentPlan plan = tune::LoadPlan(plan_path);
      const auto rows = tune::RunPlan(plan);
      auto out = OpenOut(sweep_out);
      std::vector<std::string> methods;
      for (auto m : plan.methods) methods.emplace_back(tune::MethodName(m));
      tune::WriteResultsCsv(rows, "tune sweep plan=" + std::filesystem::path(plan_path).filename().string() +
                                      " methods=" + Join(methods),
                            out);
      if (!sweep_timing.empty()) {
        auto t = OpenOut(sweep_timing);
        tune::WriteTimingCsv(rows, t);
      }
      return 0;
    }
    if (*oracle_cmd) {
      const tune::ConfigSpace space = SpaceFrom(oracle_space);
      const tune::WorkloadTrace trace = tune::LoadTrace(space, oracle_trace);
      const tune::Problem probe = tune::MakeProblem(oracle_problem, 1.0, 1.0);
      const double c = tune::ConstraintFromPercentile(trace, probe.constraint_metric, oracle_pct);
      std::cout << "constraint " << tune::FormatValue(c) << "\n";
      const auto opt = tune::OracleOptimum(trace, probe.objective, probe.constraint_metric, c);
      if (!opt) {
        std::cout << "no feasible row\n";
        return 0;
      }
      std::cout << "optimum " << tune::FormatValue(opt->value) << " row " << opt->row << "\n";
      return 0;
    }
    if (*space_cmd) {
      std::cout << tune::SpaceToJson(tune::SparkClusterSpace());
      return 0;
    }
    if (*gen_cmd) {
      const tune::ConfigSpace space = SpaceFrom(gen_space);
      tune::SaveTrace(tune::GenerateSyntheticTrace(space, gen_rows, gen_seed), gen_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "tune: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
