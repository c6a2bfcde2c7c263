#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ergmeter/counters.hpp"
#include "ergmeter/error.hpp"

namespace ergmeter::harness {

/// Mean and half-range error bar over repeated runs.
struct RepeatStats {
  double mean_j = 0.0;
  double halfrange_j = 0.0;
  double mean_ms = 0.0;
  double halfrange_ms = 0.0;
  int n = 0;

  bool operator==(const RepeatStats&) const = default;
};

struct BackendEnergy {
  std::string backend;
  double energy_j = 0.0;

  bool operator==(const BackendEnergy&) const = default;
};

struct TracePoint {
  double t_s = 0.0;
  double cumulative_j = 0.0;

  bool operator==(const TracePoint&) const = default;
};

struct MeasurementRecord {
  std::vector<std::string> command;
  double walltime_ms = 0.0;
  double energy_j = 0.0;  // sum of per_backend
  std::vector<BackendEnergy> per_backend;
  int exit_status = 0;
  std::optional<std::vector<TracePoint>> trace;
  bool valid = true;
  std::optional<RepeatStats> repeats;
  std::vector<std::string> warnings;

  double power_w() const { return walltime_ms > 0.0 ? energy_j / (walltime_ms / 1000.0) : 0.0; }
  bool command_failed() const { return exit_status != 0; }

  bool operator==(const MeasurementRecord&) const = default;
};

struct BaselineRecord {
  double idle_power_w = 0.0;
  double duration_s = 0.0;
  double energy_j = 0.0;

  bool operator==(const BaselineRecord&) const = default;
};

struct MeasureOptions {
  std::optional<double> sample_hz;
  int repeats = 1;
  /// Runs shorter than this (about ten counter updates at 10 Hz) are flagged.
  double min_duration_warn_s = 1.0;
};

/// Thrown when a run cannot be trusted (a backend's startup token changed).
/// Carries the offending record, which has valid=false.
class InvalidRunError : public Error {
 public:
  explicit InvalidRunError(MeasurementRecord record, const std::string& what);
  const MeasurementRecord& record() const noexcept { return record_; }

 private:
  MeasurementRecord record_;
};

/// Time source used for idle baselines; replaceable so that synthetic
/// backends can be driven on a virtual clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_for(double seconds) = 0;
};

class SteadyClock final : public Clock {
 public:
  double now() override;
  void sleep_for(double seconds) override;
};

inline constexpr const char* kWarnLowConfidence = "low_confidence";
inline constexpr const char* kWarnCommandFailed = "command_failed";

/// Run `command` bracketed by counter samples on every backend.
///
/// The child's stdio is inherited untouched. A nonzero exit status does not
/// throw: the record is returned with `exit_status` set and a
/// "command_failed" warning. A startup-token change on any backend throws
/// InvalidRunError. With repeats > 1 the command is rerun and the result is
/// aggregate() of the runs.
MeasurementRecord measure(const std::vector<std::string>& command,
                          std::span<counters::CounterBackend* const> backends,
                          const MeasureOptions& options = {});

BaselineRecord measure_idle(std::span<counters::CounterBackend* const> backends, double duration_s,
                            Clock& clock);
BaselineRecord measure_idle(std::span<counters::CounterBackend* const> backends,
                            double duration_s);

/// Combine repeated runs of one command into a single record with
/// mean/half-range statistics. Invalid records are dropped.
MeasurementRecord aggregate(std::span<const MeasurementRecord> records);

/// `command,walltime_ms,energy_j,power_w,valid,exit_status`
inline constexpr const char* kRecordCsvHeader =
    "command,walltime_ms,energy_j,power_w,valid,exit_status";
std::string to_csv_row(const MeasurementRecord& record);

void to_json(nlohmann::json& j, const MeasurementRecord& r);
void from_json(const nlohmann::json& j, MeasurementRecord& r);
void to_json(nlohmann::json& j, const BaselineRecord& r);

}  // namespace ergmeter::harness
