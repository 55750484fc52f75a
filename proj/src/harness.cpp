#include "tune/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "tune/random.hpp"

namespace tune {

double RelativeError(double predicted, double optimal) {
  if (optimal == 0.0) throw std::invalid_argument("relative error undefined for a zero optimum");
  return std::abs(predicted - optimal) / std::abs(optimal);
}

double Percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double ConstraintFromPercentile(const WorkloadTrace& trace, ConstraintMetric metric, double pct) {
  if (trace.size() == 0) throw std::invalid_argument("trace is empty");
  std::vector<double> values;
  values.reserve(trace.size());
  for (const auto& r : trace.rows()) {
    values.push_back(metric == ConstraintMetric::kPower ? r.power() : r.latency);
  }
  return Percentile(std::move(values), pct);
}

std::optional<OracleResult> OracleOptimum(const WorkloadTrace& trace, Objective objective,
                                          ConstraintMetric metric, double constraint) {
  std::optional<OracleResult> best;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRow& r = trace.row(i);
    const double c = metric == ConstraintMetric::kPower ? r.power() : r.latency;
    if (c > constraint) continue;
    const double v = objective == Objective::kLatency ? r.latency : r.energy;
    if (!best || v < best->value) best = OracleResult{v, i};
  }
  return best;
}

Problem MakeProblem(const std::string& kind, double constraint, double budget_s) {
  if (kind == "lup") return Problem::LatencyUnderPower(constraint, budget_s);
  if (kind == "eul") return Problem::EnergyUnderLatency(constraint, budget_s);
  throw std::invalid_argument("unknown problem '" + kind + "' (expected lup or eul)");
}

namespace {

double NormalizedValue(const ParamSpec& p, double encoded) {
  if (p.kind == ParamKind::kCategorical) {
    return p.categories.size() > 1 ? encoded / static_cast<double>(p.categories.size() - 1) : 0.0;
  }
  return (encoded - p.lo) / (p.hi - p.lo);
}

std::optional<std::size_t> Find(const ConfigSpace& space, const char* name) {
  if (!space.Contains(name)) return std::nullopt;
  return space.IndexOf(name);
}

}  // namespace

WorkloadTrace GenerateSyntheticTrace(const ConfigSpace& space, std::size_t rows, std::uint64_t seed,
                                     const SyntheticTraceParams& params) {
  if (space.size() == 0) throw std::invalid_argument("synthetic trace needs a non-empty space");
  Rng pool_rng(DeriveSeed(seed, {HashString("pool")}));
  std::vector<Configuration> pool = CandidatePool(space, rows, pool_rng);

  const auto freq = Find(space, "cpu.freq");
  const auto uncore = Find(space, "uncore.freq");
  const auto ht = Find(space, "hyperthreading");
  const auto sockets = Find(space, "n.sockets");
  const auto cores = Find(space, "n.cores");
  const auto exec_mem = Find(space, "spark.executor.memory");
  const auto mem_frac = Find(space, "spark.memory.fraction");
  std::vector<bool> hardware(space.size(), false);
  for (const auto& idx : {freq, uncore, ht, sockets, cores}) {
    if (idx) hardware[*idx] = true;
  }

  Rng model_rng(DeriveSeed(seed, {HashString("model")}));
  const std::size_t p = space.size();
  std::vector<double> weight(p), center(p), power_slope(p);
  for (std::size_t j = 0; j < p; ++j) {
    weight[j] = UniformReal(model_rng, 0.0, params.effect_weight_max);
    center[j] = UniformUnit(model_rng);
    power_slope[j] = UniformReal(model_rng, -0.03, 0.03);
  }
  struct Pair {
    std::size_t a, b;
    double coef;
  };
  std::vector<Pair> pairs;
  if (p >= 2) {
    for (int k = 0; k < params.interaction_pairs; ++k) {
      const std::size_t a = UniformIndex(model_rng, p);
      std::size_t b = UniformIndex(model_rng, p - 1);
      if (b >= a) ++b;
      pairs.push_back({a, b, UniformReal(model_rng, -params.interaction_weight, params.interaction_weight)});
    }
  }

  Rng noise_rng(DeriveSeed(seed, {HashString("noise")}));
  std::vector<TraceRow> out;
  out.reserve(rows);
  for (auto& config : pool) {
    const std::vector<double> x = Encode(space, config);
    std::vector<double> u(p);
    for (std::size_t j = 0; j < p; ++j) u[j] = NormalizedValue(space.param(j), x[j]);

    const double f = freq ? x[*freq] : 2.5;
    const double uf = uncore ? x[*uncore] : 1.7;
    const bool smt = ht ? x[*ht] > 0.0 : false;
    const double n_sockets = sockets ? x[*sockets] : 1.0;
    const double n_cores = cores ? x[*cores] : 6.0;
    const double threads = n_sockets * n_cores * (smt ? 1.25 : 1.0);

    double log_latency = std::log(params.base_latency_s) + 0.8 * std::log(3.7 / f) +
                         0.15 * std::log(2.4 / uf) + 0.65 * std::log(30.0 / threads);
    double log_power = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (hardware[j]) continue;
      log_latency += weight[j] * (u[j] - center[j]) * (u[j] - center[j]);
      log_power += power_slope[j] * u[j];
    }
    for (const auto& pr : pairs) log_latency += pr.coef * (u[pr.a] - 0.5) * (u[pr.b] - 0.5);
    if (exec_mem && mem_frac && x[*exec_mem] <= 7.0 && x[*mem_frac] < 0.3) {
      log_latency += std::log(params.cliff_factor);
    }
    log_latency += params.latency_noise * StandardNormal(noise_rng);

    const double power = (40.0 * n_sockets + 3.0 * n_sockets * n_cores * std::pow(f / 2.0, 2.2) *
                                                 (smt ? 1.15 : 1.0) +
                          8.0 * (uf / 1.7) * (uf / 1.7)) *
                         std::exp(log_power + params.power_noise * StandardNormal(noise_rng));
    const double latency = std::exp(log_latency);
    out.push_back(TraceRow{std::move(config), latency, power * latency});
  }
  return WorkloadTrace(space, std::move(out));
}

ResultRow RunCell(const std::string& workload, const WorkloadTrace& trace, const std::string& problem,
                  double percentile, double budget_s, Method method, std::uint64_t seed,
                  double interval_s, const SearchOptions& base_options, SearchResult* search_out) {
  const Problem probe = MakeProblem(problem, 1.0, 1.0);
  const double constraint = ConstraintFromPercentile(trace, probe.constraint_metric, percentile);
  const Problem prob = MakeProblem(problem, constraint, budget_s);

  SearchOptions options = base_options;
  options.method = method;
  TraceExecutor executor(trace, interval_s);
  const std::vector<Configuration> pool = trace.Configurations();
  SearchResult search = RunSearch(prob, trace.space(), pool, executor, options, seed);

  ResultRow row;
  row.workload = workload;
  row.method = method;
  row.problem = problem;
  row.percentile = percentile;
  row.budget_s = budget_s;
  row.seed = seed;
  row.constraint = constraint;
  if (const auto opt = OracleOptimum(trace, prob.objective, prob.constraint_metric, constraint)) {
    row.y_opt = opt->value;
  }
  row.best_value = search.best_value;
  if (row.best_value && row.y_opt) row.relative_error = RelativeError(*row.best_value, *row.y_opt);
  row.rounds = search.rounds;
  row.samples_completed = search.samples_completed;
  row.samples_terminated = search.samples_terminated;
  row.consumed_s = search.consumed_s;
  row.overhead_s = search.overhead_s;
  if (search_out != nullptr) *search_out = std::move(search);
  return row;
}

void ExperimentPlan::Validate() const {
  if (workloads.empty()) throw std::invalid_argument("plan lists no workloads");
  if (problems.empty() || methods.empty()) throw std::invalid_argument("plan needs problems and methods");
  for (const auto& pr : problems) MakeProblem(pr, 1.0, 1.0);
  if (percentiles.empty()) throw std::invalid_argument("plan lists no percentiles");
  for (double pct : percentiles) {
    if (!(pct > 0.0 && pct < 100.0)) throw std::invalid_argument("percentiles must lie in (0, 100)");
  }
  if (budgets.empty() && budget_multipliers.empty()) throw std::invalid_argument("plan lists no budgets");
  for (double b : budgets) {
    if (!(b > 0.0)) throw std::invalid_argument("budgets must be positive");
  }
  for (double k : budget_multipliers) {
    if (!(k > 0.0)) throw std::invalid_argument("budget multipliers must be positive");
  }
  if (seeds.empty()) throw std::invalid_argument("plan needs at least one seed");
  if (!(interval_s > 0.0)) throw std::invalid_argument("interval must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

ExperimentPlan ParsePlanJson(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  try {
    const auto doc = nlohmann::json::parse(text);
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    for (const auto& w : doc.at("workloads")) {
      WorkloadSpec spec;
      spec.trace = resolve(w.at("trace").get<std::string>());
      spec.name = w.value("name", spec.trace.stem().string());
      if (w.contains("space")) spec.space = resolve(w["space"].get<std::string>());
      plan.workloads.push_back(std::move(spec));
    }
    if (doc.contains("problems")) plan.problems = doc["problems"].get<std::vector<std::string>>();
    if (doc.contains("percentiles")) plan.percentiles = doc["percentiles"].get<std::vector<double>>();
    if (doc.contains("budgets")) plan.budgets = doc["budgets"].get<std::vector<double>>();
    if (doc.contains("budget_multipliers")) {
      plan.budget_multipliers = doc["budget_multipliers"].get<std::vector<double>>();
    }
    if (doc.contains("methods")) {
      plan.methods.clear();
      for (const auto& m : doc["methods"]) plan.methods.push_back(ParseMethod(m.get<std::string>()));
    }
    if (doc.contains("seeds")) plan.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    plan.interval_s = doc.value("interval", plan.interval_s);
    plan.threads = doc.value("threads", plan.threads);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("plan: ") + e.what());
  }
  plan.Validate();
  return plan;
}

ExperimentPlan LoadPlan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParsePlanJson(buf.str(), path.parent_path());
}

std::uint64_t CellSeed(std::uint64_t base_seed, const std::string& workload,
                       const std::string& problem, double percentile, double budget_s) {
  std::uint64_t pct_bits = 0;
  std::uint64_t budget_bits = 0;
  std::memcpy(&pct_bits, &percentile, sizeof pct_bits);
  std::memcpy(&budget_bits, &budget_s, sizeof budget_bits);
  return DeriveSeed(base_seed,
                    {HashString(workload), HashString(problem), pct_bits, budget_bits});
}

std::vector<ResultRow> RunPlan(const ExperimentPlan& plan) {
  plan.Validate();
  struct Loaded {
    std::string name;
    WorkloadTrace trace;
    std::vector<double> budgets;
  };
  std::vector<Loaded> loaded;
  for (const auto& w : plan.workloads) {
    if (!std::filesystem::exists(w.trace)) {
      throw std::runtime_error("trace file not found: " + w.trace.string());
    }
    const ConfigSpace space = w.space.empty() ? SparkClusterSpace() : LoadSpace(w.space);
    Loaded l{w.name, LoadTrace(space, w.trace), plan.budgets};
    if (l.budgets.empty()) {
      std::vector<double> lat;
      for (const auto& r : l.trace.rows()) lat.push_back(r.latency);
      const double median = Percentile(lat, 50.0);
      for (double k : plan.budget_multipliers) l.budgets.push_back(k * median);
    }
    loaded.push_back(std::move(l));
  }

  struct Cell {
    const Loaded* workload;
    std::string problem;
    double pct;
    double budget;
    Method method;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& l : loaded) {
    for (const auto& pr : plan.problems) {
      for (double pct : plan.percentiles) {
        for (double budget : l.budgets) {
          for (Method m : plan.methods) {
            for (std::uint64_t s : plan.seeds) cells.push_back({&l, pr, pct, budget, m, s});
          }
        }
      }
    }
  }

  std::vector<ResultRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell& c = cells[i];
    const std::uint64_t seed = CellSeed(c.seed, c.workload->name, c.problem, c.pct, c.budget);
    rows[i] = RunCell(c.workload->name, c.workload->trace, c.problem, c.pct, c.budget, c.method,
                      seed, plan.interval_s);
    rows[i].seed = c.seed;
  };
  if (plan.threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (int t = 0; t < plan.threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    }
  }
  return rows;
}

std::vector<SummaryRow> Summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, int>, SummaryRow> groups;
  std::vector<std::tuple<std::string, std::string, int>> order;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.workload, r.problem, static_cast<int>(r.method));
    auto [it, inserted] = groups.try_emplace(key);
    SummaryRow& s = it->second;
    if (inserted) {
      s.workload = r.workload;
      s.problem = r.problem;
      s.method = r.method;
      order.push_back(key);
    }
    ++s.cells;
    if (r.relative_error) {
      ++s.found;
      s.mean_relative_error += *r.relative_error;
      s.mean_best_value += *r.best_value;
    }
    s.mean_rounds += r.rounds;
    s.mean_samples_completed += r.samples_completed;
    s.mean_samples_terminated += r.samples_terminated;
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    SummaryRow s = groups.at(key);
    if (s.found > 0) {
      s.mean_relative_error /= s.found;
      s.mean_best_value /= s.found;
    }
    s.mean_rounds /= s.cells;
    s.mean_samples_completed /= s.cells;
    s.mean_samples_terminated /= s.cells;
    out.push_back(s);
  }
  return out;
}

namespace {

std::string Num(double v) { return FormatValue(v); }
std::string Opt(const std::optional<double>& v) { return v ? Num(*v) : std::string(); }

}  // namespace

void WriteResultsCsv(const std::vector<ResultRow>& rows, const std::string& metadata,
                     std::ostream& out) {
  out << "# " << metadata << "\n";
  out << "workload,method,problem,percentile,budget_s,seed,constraint,y_opt,best_value,re,"
         "rounds,samples_completed,samples_terminated,consumed_s\n";
  for (const auto& r : rows) {
    out << r.workload << ',' << MethodName(r.method) << ',' << r.problem << ',' << Num(r.percentile)
        << ',' << Num(r.budget_s) << ',' << r.seed << ',' << Num(r.constraint) << ','
        << Opt(r.y_opt) << ',' << Opt(r.best_value) << ',' << Opt(r.relative_error) << ','
        << r.rounds << ',' << r.samples_completed << ',' << r.samples_terminated << ','
        << Num(r.consumed_s) << "\n";
  }
  for (const auto& s : Summarize(rows)) {
    out << s.workload << ',' << MethodName(s.method) << ',' << s.problem << ",*,*,mean,,,"
        << (s.found ? Num(s.mean_best_value) : "") << ',' << (s.found ? Num(s.mean_relative_error) : "")
        << ',' << Num(s.mean_rounds) << ',' << Num(s.mean_samples_completed) << ','
        << Num(s.mean_samples_terminated) << ",\n";
  }
}

void WriteTimingCsv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "workload,method,problem,percentile,budget_s,seed,rounds,consumed_s,overhead_s,"
         "overhead_per_sample_s\n";
  for (const auto& r : rows) {
    out << r.workload << ',' << MethodName(r.method) << ',' << r.problem << ',' << Num(r.percentile)
        << ',' << Num(r.budget_s) << ',' << r.seed << ',' << r.rounds << ',' << Num(r.consumed_s)
        << ',' << Num(r.overhead_s) << ','
        << Num(r.rounds > 0 ? r.overhead_s / r.rounds : 0.0) << "\n";
  }
}

}  // namespace tune
