#include "tune/execution.hpp"

#include <csignal>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace tune {

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string StripCr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double ParseNumber(const std::string& text, const std::string& what) {
  double x = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, x);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument(what + ": cannot parse '" + text + "' as a number");
  }
  return x;
}

}  // namespace

ProgressCurve::ProgressCurve(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2 || knots_.front() != std::pair{0.0, 0.0} ||
      knots_.back() != std::pair{1.0, 1.0}) {
    throw std::invalid_argument("progress curve must run from (0,0) to (1,1)");
  }
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k].first > knots_[k - 1].first) || knots_[k].second < knots_[k - 1].second) {
      throw std::invalid_argument("progress curve knots must increase in time, not decrease in energy");
    }
  }
}

double ProgressCurve::EnergyFraction(double f) const {
  f = std::clamp(f, 0.0, 1.0);
  if (knots_.empty()) return f;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), f,
                                   [](double v, const auto& knot) { return v < knot.first; });
  if (it == knots_.end()) return 1.0;
  const auto& [t1, e1] = *it;
  const auto& [t0, e0] = *(it - 1);
  return e0 + (e1 - e0) * (f - t0) / (t1 - t0);
}

WorkloadTrace::WorkloadTrace(ConfigSpace space, std::vector<TraceRow> rows)
    : space_(std::move(space)), rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const TraceRow& r = rows_[i];
    if (!(r.latency > 0.0) || !(r.energy > 0.0) || !std::isfinite(r.latency) ||
        !std::isfinite(r.energy)) {
      throw std::invalid_argument("trace row " + std::to_string(i) +
                                  ": latency and energy must be positive");
    }
    if (!index_.emplace(Encode(space_, r.config), i).second) {
      throw std::invalid_argument("trace row " + std::to_string(i) + " duplicates an earlier configuration");
    }
  }
}

std::optional<std::size_t> WorkloadTrace::Find(const Configuration& config) const {
  std::vector<double> key;
  try {
    key = Encode(space_, config);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Configuration> WorkloadTrace::Configurations() const {
  std::vector<Configuration> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.config);
  return out;
}

std::string TraceToCsv(const WorkloadTrace& trace) {
  std::string out;
  for (const auto& p : trace.space().params()) out += p.name + ",";
  out += "latency_s,energy_j\n";
  for (const auto& r : trace.rows()) {
    for (const auto& v : r.config.values) out += FormatValue(v) + ",";
    out += FormatValue(r.latency) + "," + FormatValue(r.energy) + "\n";
  }
  return out;
}

WorkloadTrace ParseTraceCsv(const ConfigSpace& space, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace: empty file");
  const std::vector<std::string> header = SplitCsvLine(StripCr(line));
  const std::size_t p = space.size();
  if (header.size() != p + 2 || header[p] != "latency_s" || header[p + 1] != "energy_j") {
    throw std::invalid_argument("trace: header must list the space's parameters then latency_s,energy_j");
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (header[j] != space.param(j).name) {
      throw std::invalid_argument("trace: column " + std::to_string(j) + " is '" + header[j] +
                                  "', expected '" + space.param(j).name + "'");
    }
  }
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = StripCr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitCsvLine(line);
    if (fields.size() != p + 2) {
      throw std::invalid_argument("trace line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(p + 2) + " fields");
    }
    TraceRow row;
    for (std::size_t j = 0; j < p; ++j) row.config.values.push_back(ParseValue(space.param(j), fields[j]));
    space.Validate(row.config);
    row.latency = ParseNumber(fields[p], "latency_s");
    row.energy = ParseNumber(fields[p + 1], "energy_j");
    rows.push_back(std::move(row));
  }
  return WorkloadTrace(space, std::move(rows));
}

WorkloadTrace LoadTrace(const ConfigSpace& space, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseTraceCsv(space, buf.str());
}

void SaveTrace(const WorkloadTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file " + path.string());
  out << TraceToCsv(trace);
}

// --- TraceExecutor ---------------------------------------------------------

TraceExecutor::TraceExecutor(const WorkloadTrace& trace, double interval_s)
    : trace_(trace), interval_(interval_s) {
  if (!(interval_s > 0.0)) throw std::invalid_argument("poll interval must be positive");
}

void TraceExecutor::SetProgressCurve(std::size_t row, ProgressCurve curve) {
  if (row >= trace_.size()) throw std::out_of_range("progress curve row out of range");
  curves_[row] = std::move(curve);
}

TraceExecutor::Run& TraceExecutor::Lookup(RunHandle handle) {
  const auto it = runs_.find(handle.id);
  if (it == runs_.end()) throw ExecutionError("unknown run handle");
  return it->second;
}

const TraceExecutor::Run& TraceExecutor::Lookup(RunHandle handle) const {
  const auto it = runs_.find(handle.id);
  if (it == runs_.end()) throw ExecutionError("unknown run handle");
  return it->second;
}

RunHandle TraceExecutor::Start(const Configuration& config) {
  const auto row = trace_.Find(config);
  if (!row) throw ExecutionError("configuration is not present in the trace");
  const RunHandle handle{next_id_++};
  runs_[handle.id] = Run{*row, State::kLive, 0, 0.0};
  return handle;
}

BehaviorReading TraceExecutor::Poll(RunHandle handle, int t) {
  Run& run = Lookup(handle);
  if (run.state == State::kTerminated) throw ExecutionError("poll after terminate");
  if (run.state == State::kFinished) throw ExecutionError("poll after the run finished");
  if (t <= run.last_poll) throw ExecutionError("poll intervals must increase");
  run.last_poll = t;

  const TraceRow& row = trace_.row(run.row);
  const double wall = t * interval_;
  BehaviorReading r;
  if (wall < row.latency) {
    r.elapsed_latency = wall;
    const auto curve = curves_.find(run.row);
    r.elapsed_energy = curve == curves_.end()
                           ? row.power() * wall
                           : row.energy * curve->second.EnergyFraction(wall / row.latency);
    run.consumed = wall;
    return r;
  }
  r.elapsed_latency = row.latency;
  r.elapsed_energy = row.energy;
  r.finished = true;
  r.final_latency = row.latency;
  r.final_energy = row.energy;
  run.state = State::kFinished;
  run.consumed = row.latency;
  return r;
}

double TraceExecutor::Terminate(RunHandle handle) {
  Run& run = Lookup(handle);
  if (run.state == State::kTerminated) throw ExecutionError("run already terminated");
  if (run.state == State::kFinished) throw ExecutionError("cannot terminate a finished run");
  run.state = State::kTerminated;
  run.consumed = run.last_poll * interval_;
  return run.consumed;
}

double TraceExecutor::ConsumedTime(RunHandle handle) const { return Lookup(handle).consumed; }

// --- SubprocessExecutor ----------------------------------------------------

struct SubprocessExecutor::Process {
  pid_t pid = -1;
  std::filesystem::path metrics;
  std::chrono::steady_clock::time_point start;
  bool live = true;
  bool finished = false;
  int last_poll = 0;
  double consumed = 0.0;
};

namespace {

struct Metrics {
  double elapsed_s = 0.0;
  double elapsed_j = 0.0;
  bool any = false;
};

Metrics ReadLastMetrics(const std::filesystem::path& path) {
  Metrics m;
  std::ifstream in(path);
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    // A line without its newline may still be in the middle of a write.
    if (in.eof()) break;
    if (!StripCr(line).empty()) last = StripCr(line);
  }
  if (last.empty()) return m;
  const auto fields = SplitCsvLine(last);
  if (fields.size() != 2) throw ExecutionError("malformed metrics line '" + last + "'");
  m.elapsed_s = ParseNumber(fields[0], "elapsed_s");
  m.elapsed_j = ParseNumber(fields[1], "elapsed_j");
  m.any = true;
  return m;
}

double SecondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SubprocessExecutor::SubprocessExecutor(ConfigSpace space, std::string command_template,
                                       double interval_s, std::filesystem::path work_dir)
    : space_(std::move(space)),
      command_template_(std::move(command_template)),
      interval_(interval_s),
      work_dir_(std::move(work_dir)) {
  if (!(interval_s > 0.0)) throw std::invalid_argument("poll interval must be positive");
  std::filesystem::create_directories(work_dir_);
}

SubprocessExecutor::~SubprocessExecutor() {
  for (auto& [id, proc] : runs_) {
    if (proc->live) {
      ::kill(-proc->pid, SIGKILL);
      ::waitpid(proc->pid, nullptr, 0);
    }
  }
}

std::string SubprocessExecutor::ExpandCommand(const Configuration& config) const {
  space_.Validate(config);
  std::string cmd = command_template_;
  for (std::size_t j = 0; j < space_.size(); ++j) {
    const std::string key = "{" + space_.param(j).name + "}";
    const std::string value = FormatValue(config.values[j]);
    for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
      cmd.replace(pos, key.size(), value);
    }
  }
  return cmd;
}

RunHandle SubprocessExecutor::Start(const Configuration& config) {
  const std::string cmd = ExpandCommand(config);
  auto proc = std::make_unique<Process>();
  const RunHandle handle{next_id_++};
  proc->metrics = work_dir_ / ("run_" + std::to_string(handle.id) + ".metrics");
  std::filesystem::remove(proc->metrics);
  { std::ofstream touch(proc->metrics); }

  const pid_t pid = ::fork();
  if (pid < 0) throw ExecutionError("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::setenv("TUNE_METRICS_FILE", proc->metrics.c_str(), 1);
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  proc->pid = pid;
  proc->start = std::chrono::steady_clock::now();
  runs_[handle.id] = std::move(proc);
  return handle;
}

BehaviorReading SubprocessExecutor::Poll(RunHandle handle, int t) {
  const auto it = runs_.find(handle.id);
  if (it == runs_.end()) throw ExecutionError("unknown run handle");
  Process& proc = *it->second;
  if (!proc.live) throw ExecutionError(proc.finished ? "poll after the run finished" : "poll after terminate");
  if (t <= proc.last_poll) throw ExecutionError("poll intervals must increase");
  proc.last_poll = t;

  const auto due = proc.start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(t * interval_));
  std::this_thread::sleep_until(due);

  int status = 0;
  const pid_t done = ::waitpid(proc.pid, &status, WNOHANG);
  const double wall = SecondsSince(proc.start);
  BehaviorReading r;
  if (done == proc.pid) {
    proc.live = false;
    proc.finished = true;
    proc.consumed = wall;
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw ExecutionError("workload exited abnormally (status " + std::to_string(status) + ")");
    }
    const Metrics m = ReadLastMetrics(proc.metrics);
    r.finished = true;
    r.elapsed_latency = m.any ? m.elapsed_s : wall;
    r.elapsed_energy = m.any ? m.elapsed_j : 0.0;
    r.final_latency = r.elapsed_latency;
    r.final_energy = r.elapsed_energy;
    return r;
  }
  proc.consumed = wall;
  const Metrics m = ReadLastMetrics(proc.metrics);
  r.elapsed_latency = m.any ? m.elapsed_s : wall;
  r.elapsed_energy = m.elapsed_j;
  return r;
}

double SubprocessExecutor::Terminate(RunHandle handle) {
  const auto it = runs_.find(handle.id);
  if (it == runs_.end()) throw ExecutionError("unknown run handle");
  Process& proc = *it->second;
  if (proc.finished) throw ExecutionError("cannot terminate a finished run");
  if (!proc.live) throw ExecutionError("run already terminated");
  ::kill(-proc.pid, SIGKILL);
  ::waitpid(proc.pid, nullptr, 0);
  proc.live = false;
  proc.consumed = SecondsSince(proc.start);
  return proc.consumed;
}

double SubprocessExecutor::ConsumedTime(RunHandle handle) const {
  const auto it = runs_.find(handle.id);
  if (it == runs_.end()) throw ExecutionError("unknown run handle");
  return it->second->consumed;
}

}  // namespace tune
