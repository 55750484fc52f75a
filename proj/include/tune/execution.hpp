// Running configurations: a virtual-time trace simulator and a subprocess
// executor, both polled at a fixed interval.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tune/config_space.hpp"

namespace tune {

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BehaviorReading {
  double elapsed_latency = 0.0;  // seconds
  double elapsed_energy = 0.0;   // joules
  bool finished = false;
  std::optional<double> final_latency;  // set iff finished
  std::optional<double> final_energy;
};

struct RunHandle {
  std::uint64_t id = 0;
};

class Executor {
 public:
  virtual ~Executor() = default;

  virtual RunHandle Start(const Configuration& config) = 0;
  // Reading at wall time t * interval since start. Polls must use
  // increasing t.
  virtual BehaviorReading Poll(RunHandle handle, int t) = 0;
  // Closes an unfinished run and returns its consumed time.
  virtual double Terminate(RunHandle handle) = 0;
  // Consumed time so far (final latency once finished).
  virtual double ConsumedTime(RunHandle handle) const = 0;

  virtual double interval() const = 0;
};

// Maps elapsed-time fraction to elapsed-energy fraction. Knots are
// (time_fraction, energy_fraction) pairs, strictly increasing in time,
// from (0, 0) to (1, 1), energy non-decreasing; linear in between.
class ProgressCurve {
 public:
  ProgressCurve() = default;  // linear accrual
  explicit ProgressCurve(std::vector<std::pair<double, double>> knots);

  double EnergyFraction(double time_fraction) const;

 private:
  std::vector<std::pair<double, double>> knots_;
};

struct TraceRow {
  Configuration config;
  double latency = 0.0;  // seconds
  double energy = 0.0;   // joules

  double power() const { return energy / latency; }
};

class WorkloadTrace {
 public:
  WorkloadTrace() = default;
  WorkloadTrace(ConfigSpace space, std::vector<TraceRow> rows);

  const ConfigSpace& space() const { return space_; }
  const std::vector<TraceRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const TraceRow& row(std::size_t i) const { return rows_.at(i); }

  std::optional<std::size_t> Find(const Configuration& config) const;

  std::vector<Configuration> Configurations() const;

 private:
  ConfigSpace space_;
  std::vector<TraceRow> rows_;
  std::map<std::vector<double>, std::size_t> index_;
};

// Trace CSV: header is the parameter names in space order followed by
// latency_s and energy_j; numbers are written in shortest round-trip form.
std::string TraceToCsv(const WorkloadTrace& trace);
WorkloadTrace ParseTraceCsv(const ConfigSpace& space, const std::string& text);
WorkloadTrace LoadTrace(const ConfigSpace& space, const std::filesystem::path& path);
void SaveTrace(const WorkloadTrace& trace, const std::filesystem::path& path);

// Replays trace rows in virtual time. Latency accrues with wall time and
// energy follows the row's progress curve (linear unless overridden).
class TraceExecutor final : public Executor {
 public:
  TraceExecutor(const WorkloadTrace& trace, double interval_s = 5.0);

  // Per-row energy accrual curve; rows without one accrue linearly.
  void SetProgressCurve(std::size_t row, ProgressCurve curve);

  RunHandle Start(const Configuration& config) override;
  BehaviorReading Poll(RunHandle handle, int t) override;
  double Terminate(RunHandle handle) override;
  double ConsumedTime(RunHandle handle) const override;
  double interval() const override { return interval_; }

 private:
  enum class State { kLive, kFinished, kTerminated };
  struct Run {
    std::size_t row = 0;
    State state = State::kLive;
    int last_poll = 0;
    double consumed = 0.0;
  };

  Run& Lookup(RunHandle handle);
  const Run& Lookup(RunHandle handle) const;

  const WorkloadTrace& trace_;
  double interval_;
  std::map<std::size_t, ProgressCurve> curves_;
  std::map<std::uint64_t, Run> runs_;
  std::uint64_t next_id_ = 1;
};

// Runs a shell command per configuration. Placeholders {param.name} in the
// command template are replaced by the configuration's values, and the
// environment variable TUNE_METRICS_FILE names a file the workload appends
// `elapsed_s,elapsed_j` lines to. The run finishes when the process exits;
// termination kills its process group.
class SubprocessExecutor final : public Executor {
 public:
  SubprocessExecutor(ConfigSpace space, std::string command_template, double interval_s,
                     std::filesystem::path work_dir);
  ~SubprocessExecutor() override;

  SubprocessExecutor(const SubprocessExecutor&) = delete;
  SubprocessExecutor& operator=(const SubprocessExecutor&) = delete;

  RunHandle Start(const Configuration& config) override;
  BehaviorReading Poll(RunHandle handle, int t) override;
  double Terminate(RunHandle handle) override;
  double ConsumedTime(RunHandle handle) const override;
  double interval() const override { return interval_; }

  std::string ExpandCommand(const Configuration& config) const;

 private:
  struct Process;

  ConfigSpace space_;
  std::string command_template_;
  double interval_;
  std::filesystem::path work_dir_;
  std::map<std::uint64_t, std::unique_ptr<Process>> runs_;
  std::uint64_t next_id_ = 1;
};

}  // namespace tune
