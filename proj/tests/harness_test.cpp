#include "tune/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tune {
namespace {

namespace fs = std::filesystem;

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) : path_(fs::temp_directory_path() / ("tune_harness_" + tag)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Harness, RelativeError) {
  EXPECT_EQ(RelativeError(42.0, 42.0), 0.0);
  EXPECT_DOUBLE_EQ(RelativeError(60.0, 50.0), 0.2);
  EXPECT_DOUBLE_EQ(RelativeError(40.0, 50.0), 0.2);
  EXPECT_THROW(RelativeError(1.0, 0.0), std::invalid_argument);
}

TEST(Harness, Percentile) {
  const std::vector<double> v{100, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  EXPECT_DOUBLE_EQ(Percentile(v, 50), 55.0);
  EXPECT_DOUBLE_EQ(Percentile(v, 0), 10.0);
  EXPECT_DOUBLE_EQ(Percentile(v, 100), 100.0);
  EXPECT_DOUBLE_EQ(Percentile(v, 10), 19.0);
  EXPECT_DOUBLE_EQ(Percentile({7.0}, 30), 7.0);
  EXPECT_THROW(Percentile({}, 50), std::invalid_argument);
  EXPECT_THROW(Percentile(v, 101), std::invalid_argument);
  Rng rng(1);
  std::vector<double> r(37);
  for (auto& x : r) x = UniformReal(rng, 0, 1);
  double prev = -1;
  for (int p = 0; p <= 100; ++p) {
    const double q = Percentile(r, p);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

// Independent scan used as the oracle's oracle.
std::optional<double> Scan(const WorkloadTrace& t, const Problem& p) {
  std::optional<double> best;
  for (const auto& r : t.rows()) {
    if (p.ConstraintOf(r.latency, r.energy) > p.constraint) continue;
    const double v = p.ObjectiveOf(r.latency, r.energy);
    if (!best || v < *best) best = v;
  }
  return best;
}

TEST(Harness, OracleMatchesScan) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const WorkloadTrace t = GenerateSyntheticTrace(SparkClusterSpace(), 100, seed);
    for (const std::string kind : {"lup", "eul"}) {
      for (double pct : {10.0, 50.0, 90.0}) {
        const Problem probe = MakeProblem(kind, 1, 1);
        const double c = ConstraintFromPercentile(t, probe.constraint_metric, pct);
        const Problem p = MakeProblem(kind, c, 1);
        const auto o = OracleOptimum(t, p.objective, p.constraint_metric, c);
        ASSERT_TRUE(o.has_value());
        EXPECT_EQ(o->value, *Scan(t, p));
        EXPECT_EQ(p.ObjectiveOf(t.row(o->row).latency, t.row(o->row).energy), o->value);
      }
    }
  }
  const WorkloadTrace t = GenerateSyntheticTrace(SparkClusterSpace(), 20, 3);
  EXPECT_FALSE(OracleOptimum(t, Objective::kLatency, ConstraintMetric::kPower, 1e-9).has_value());
}

TEST(Harness, OracleTieGoesToFirstRow) {
  const ConfigSpace s({ParamSpec::Integer("x", 1, 9)});
  const WorkloadTrace t(s, {{{{1.0}}, 5.0, 10.0}, {{{2.0}}, 3.0, 10.0}, {{{3.0}}, 3.0, 10.0}});
  const auto o = OracleOptimum(t, Objective::kLatency, ConstraintMetric::kPower, 100.0);
  EXPECT_EQ(o->row, 1u);
}

TEST(Harness, MakeProblem) {
  EXPECT_EQ(MakeProblem("lup", 100, 10).objective, Objective::kLatency);
  EXPECT_EQ(MakeProblem("eul", 100, 10).constraint_metric, ConstraintMetric::kLatency);
  EXPECT_THROW(MakeProblem("xyz", 100, 10), std::invalid_argument);
}

TEST(Harness, SyntheticTrace) {
  const ConfigSpace space = SparkClusterSpace();
  const WorkloadTrace a = GenerateSyntheticTrace(space, 300, 1);
  const WorkloadTrace b = GenerateSyntheticTrace(space, 300, 1);
  const WorkloadTrace c = GenerateSyntheticTrace(space, 300, 2);
  ASSERT_EQ(a.size(), 300u);
  EXPECT_EQ(TraceToCsv(a), TraceToCsv(b));
  EXPECT_NE(TraceToCsv(a), TraceToCsv(c));
  std::vector<double> lat;
  for (const auto& r : a.rows()) {
    EXPECT_GT(r.latency, 0.0);
    EXPECT_GT(r.energy, 0.0);
    EXPECT_TRUE(std::isfinite(r.latency) && std::isfinite(r.energy));
    lat.push_back(r.latency);
  }
  // A useful search problem needs a wide spread of outcomes.
  EXPECT_GT(Percentile(lat, 90) / Percentile(lat, 10), 2.0);
  // Generic effects for a space the model does not know.
  const ConfigSpace other({ParamSpec::Continuous("a", 0, 1), ParamSpec::Categorical("b", {"x", "y", "z"})});
  EXPECT_EQ(GenerateSyntheticTrace(other, 50, 0).size(), 50u);
}

TEST(Harness, CellSeed) {
  const auto s = CellSeed(0, "w", "lup", 50, 100);
  EXPECT_EQ(s, CellSeed(0, "w", "lup", 50, 100));
  EXPECT_NE(s, CellSeed(1, "w", "lup", 50, 100));
  EXPECT_NE(s, CellSeed(0, "v", "lup", 50, 100));
  EXPECT_NE(s, CellSeed(0, "w", "eul", 50, 100));
  EXPECT_NE(s, CellSeed(0, "w", "lup", 60, 100));
  EXPECT_NE(s, CellSeed(0, "w", "lup", 50, 200));
}

TEST(Harness, PlanParsing) {
  const auto plan = ParsePlanJson(R"({"workloads":[{"name":"w","trace":"t.csv"}],
      "problems":["eul"],"percentiles":[30],"budgets":[100],"methods":["bo","cello"],
      "seeds":[1,2],"interval":2.5,"threads":2})",
                                  "/base");
  EXPECT_EQ(plan.workloads[0].trace, fs::path("/base/t.csv"));
  EXPECT_EQ(plan.workloads[0].name, "w");
  EXPECT_EQ(plan.methods, (std::vector<Method>{Method::kBo, Method::kCensored}));
  EXPECT_EQ(plan.interval_s, 2.5);
  EXPECT_EQ(plan.threads, 2);
  const auto defaults = ParsePlanJson(R"({"workloads":[{"trace":"/abs/x.csv"}]})");
  EXPECT_EQ(defaults.workloads[0].name, "x");
  EXPECT_EQ(defaults.methods.size(), 6u);
  EXPECT_EQ(defaults.seeds.size(), 10u);

  EXPECT_THROW(ParsePlanJson("{"), std::invalid_argument);
  EXPECT_THROW(ParsePlanJson(R"({"workloads":[]})"), std::invalid_argument);
  EXPECT_THROW(ParsePlanJson(R"({"workloads":[{"trace":"a"}],"percentiles":[100]})"), std::invalid_argument);
  EXPECT_THROW(ParsePlanJson(R"({"workloads":[{"trace":"a"}],"seeds":[]})"), std::invalid_argument);
  EXPECT_THROW(ParsePlanJson(R"({"workloads":[{"trace":"a"}],"methods":["smac"]})"), std::invalid_argument);
  EXPECT_THROW(ParsePlanJson(R"({"workloads":[{"trace":"a"}],"problems":["max"]})"), std::invalid_argument);
  EXPECT_THROW(ParsePlanJson(R"({"workloads":[{"trace":"a"}],"budgets":[-5]})"), std::invalid_argument);
  EXPECT_THROW(LoadPlan("/nonexistent/plan.json"), std::runtime_error);
}

ExperimentPlan SmallPlan(const fs::path& trace) {
  ExperimentPlan plan;
  plan.workloads = {{"synth", trace, {}}};
  plan.problems = {"lup"};
  plan.percentiles = {50};
  plan.budgets = {};
  plan.budget_multipliers = {20};
  plan.methods = {Method::kBo, Method::kCensored};
  plan.seeds = {0, 1, 2};
  return plan;
}

TEST(Harness, RunPlanRowsAndSummary) {
  TempDir dir("plan");
  const fs::path trace = dir.path() / "synth.csv";
  SaveTrace(GenerateSyntheticTrace(SparkClusterSpace(), 80, 4), trace);
  const auto rows = RunPlan(SmallPlan(trace));
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].method, i < 3 ? Method::kBo : Method::kCensored);
    EXPECT_EQ(rows[i].seed, i % 3);
    ASSERT_TRUE(rows[i].y_opt && rows[i].best_value);
    EXPECT_GE(*rows[i].best_value, *rows[i].y_opt);
    EXPECT_DOUBLE_EQ(*rows[i].relative_error, RelativeError(*rows[i].best_value, *rows[i].y_opt));
  }
  // Same cell, same seed: both methods start from the same configuration.
  EXPECT_EQ(rows[0].constraint, rows[3].constraint);

  const auto summary = Summarize(rows);
  ASSERT_EQ(summary.size(), 2u);
  double mean = 0.0;
  for (int i = 0; i < 3; ++i) mean += *rows[i].relative_error / 3;
  EXPECT_NEAR(summary[0].mean_relative_error, mean, 1e-12);
  EXPECT_EQ(summary[0].cells, 3);
  EXPECT_EQ(summary[0].found, 3);

  std::ostringstream csv;
  WriteResultsCsv(rows, "test", csv);
  std::istringstream in(csv.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 1u + 1u + 6u + 2u);
  EXPECT_EQ(lines[0], "# test");
  EXPECT_EQ(lines[1],
            "workload,method,problem,percentile,budget_s,seed,constraint,y_opt,best_value,re,rounds,"
            "samples_completed,samples_terminated,consumed_s");
  EXPECT_EQ(lines[8].rfind("synth,bo,lup,*,*,mean,", 0), 0u);

  // Threaded execution gives the same rows.
  ExperimentPlan threaded = SmallPlan(trace);
  threaded.threads = 3;
  std::ostringstream csv2;
  WriteResultsCsv(RunPlan(threaded), "test", csv2);
  EXPECT_EQ(csv.str(), csv2.str());
}

TEST(Harness, MissingTraceNamesPath) {
  ExperimentPlan plan = SmallPlan("/nonexistent/dir/trace_xyz.csv");
  try {
    RunPlan(plan);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/trace_xyz.csv"), std::string::npos);
  }
}

TEST(Harness, TimingCsv) {
  ResultRow r;
  r.workload = "w";
  r.method = Method::kBo;
  r.problem = "lup";
  r.samples_completed = 3;
  r.samples_terminated = 1;
  r.rounds = 4;
  r.overhead_s = 2.0;
  std::ostringstream out;
  WriteTimingCsv({r}, out);
  EXPECT_NE(out.str().find("overhead_s"), std::string::npos);
  EXPECT_NE(out.str().find(",0.5"), std::string::npos);
}

// --- command line -------------------------------------------------------

int Sh(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

TEST(Cli, RunIsByteIdenticalAcrossInvocations) {
  TempDir dir("cli");
  const std::string cli = TUNE_CLI;
  const fs::path trace = dir.path() / "w.csv";
  ASSERT_EQ(Sh(cli + " gen-trace --seed 3 --rows 120 --out " + trace.string()), 0);
  const std::string args = " run --trace " + trace.string() +
                           " --problem eul --method cello --percentile 40 --budget 400 --seed 5";
  ASSERT_EQ(Sh(cli + args + " --out " + (dir.path() / "a.csv").string()), 0);
  ASSERT_EQ(Sh(cli + args + " --out " + (dir.path() / "b.csv").string() + " --history " +
               (dir.path() / "h.jsonl").string()),
            0);
  const std::string a = ReadFile(dir.path() / "a.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, ReadFile(dir.path() / "b.csv"));
  EXPECT_FALSE(ReadFile(dir.path() / "h.jsonl").empty());
}

TEST(Cli, SpaceAndOracle) {
  TempDir dir("cli_oracle");
  const std::string cli = TUNE_CLI;
  ASSERT_EQ(std::system((cli + " space > " + (dir.path() / "s.json").string()).c_str()), 0);
  EXPECT_NO_THROW(LoadSpace(dir.path() / "s.json"));
  const fs::path trace = dir.path() / "w.csv";
  ASSERT_EQ(Sh(cli + " gen-trace --seed 1 --rows 50 --out " + trace.string()), 0);
  ASSERT_EQ(std::system((cli + " oracle --trace " + trace.string() + " --problem lup --percentile 50 > " +
                         (dir.path() / "o.txt").string())
                            .c_str()),
            0);
  const WorkloadTrace t = LoadTrace(SparkClusterSpace(), trace);
  const double c = ConstraintFromPercentile(t, ConstraintMetric::kPower, 50);
  const auto o = OracleOptimum(t, Objective::kLatency, ConstraintMetric::kPower, c);
  EXPECT_EQ(ReadFile(dir.path() / "o.txt"), "constraint " + FormatValue(c) + "\noptimum " +
                                                FormatValue(o->value) + " row " + std::to_string(o->row) + "\n");
}

TEST(Cli, BadArgumentsFail) {
  const std::string cli = TUNE_CLI;
  EXPECT_NE(Sh(cli), 0);
  EXPECT_NE(Sh(cli + " run --trace /nonexistent.csv --budget 10"), 0);
  EXPECT_NE(Sh(cli + " run --budget 10 --method smac --trace x"), 0);
  EXPECT_NE(Sh(cli + " sweep --plan /nonexistent/plan.json --out /dev/null"), 0);
}

}  // namespace
}  // namespace tune
