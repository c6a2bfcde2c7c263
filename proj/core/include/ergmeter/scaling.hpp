#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ergmeter::scaling {

struct Machine {
  int cores_per_node = 36;

  bool operator==(const Machine&) const = default;
};

/// One run of a scaling study.
struct RunRecord {
  std::string label;
  int n_nodes = 1;
  int mpi_tasks = 1;
  int omp_threads = 1;
  int cores = 1;
  double walltime_ms = 0.0;
  double energy_j = 0.0;

  double walltime_s() const { return walltime_ms / 1000.0; }
  double power_w() const { return energy_j / walltime_s(); }

  bool operator==(const RunRecord&) const = default;
};

/// Build a RunRecord with cores = mpi_tasks * omp_threads.
RunRecord make_run(std::string label, int n_nodes, int mpi_tasks, int omp_threads,
                   double walltime_ms, double energy_j);

struct ScalingStudy {
  std::vector<RunRecord> runs;
  double idle_power_w = 0.0;
  Machine machine;

  /// Throws InvalidArgument/EmptyStudy on broken invariants.
  void validate() const;

  bool operator==(const ScalingStudy&) const = default;
};

/// Amdahl time model: t(c) = t1 * (s + (1 - s) / c).
struct TimeModel {
  double t1_ms = 1.0;
  double serial_fraction = 0.0;

  double predict_ms(double cores) const;
};

/// Node-granular power model: P(c) = ceil(c / cores_per_node) * p_idle + c * p_core.
struct PowerModel {
  double p_idle_node_w = 0.0;
  double p_core_w = 0.0;

  double predict_w(int cores, const Machine& machine) const;
};

struct Metrics {
  double power_w = 0.0;
  std::optional<double> speedup;
  std::optional<double> parallel_efficiency;
};

Metrics derive_metrics(const RunRecord& run, const RunRecord* reference = nullptr);

/// Scale one full-node run to n identical nodes: energy times n, same walltime.
RunRecord pseudo_parallel(const RunRecord& single_node, int n);

/// The run with the lowest energy; ties go to fewer cores.
const RunRecord& find_measured_minimum(const ScalingStudy& study);

/// Least-squares fit of TimeModel in log space.
TimeModel fit_time_model(std::span<const RunRecord> runs);
TimeModel fit_time_model(const ScalingStudy& study);

/// Non-negative least-squares fit of PowerModel to measured run powers.
PowerModel fit_power_model(const ScalingStudy& study);

struct CurvePoint {
  int cores = 1;
  double t_s = 0.0;
  double power_w = 0.0;
  double energy_j = 0.0;
};

struct EnergyCurve {
  std::vector<CurvePoint> points;
  int argmin_cores = 1;  // energy minimum over the supplied range
};

EnergyCurve predict_energy_curve(const TimeModel& time_model, const PowerModel& power_model,
                                 const Machine& machine, std::span<const int> cores_range);
EnergyCurve predict_energy_curve(const TimeModel& time_model, const PowerModel& power_model,
                                 const Machine& machine, int max_cores);

struct PowerPoint {
  int cores = 1;
  double power_w = 0.0;
};

struct PowerSummary {
  std::vector<PowerPoint> subnode_points;
  std::vector<PowerPoint> fullnode_points;
  double fullnode_loglog_slope = 0.0;
};

/// Throws InsufficientFullNodeRuns unless two distinct full-node core counts exist.
PowerSummary power_scaling_summary(const ScalingStudy& study, const Machine& machine);

struct EnergyTimePoint {
  double t_s = 0.0;
  double energy_j = 0.0;
};

/// `n_points` log-spaced samples of E = P * t over [t_min_s, t_max_s].
std::vector<EnergyTimePoint> iso_power_points(double power_w, double t_min_s, double t_max_s,
                                              int n_points);

// Ingestion.
inline constexpr const char* kStudyCsvHeader =
    "label,n_nodes,mpi_tasks,omp_threads,cores,walltime_ms,energy_j";

std::vector<RunRecord> parse_study_csv(std::string_view text);
ScalingStudy load_study(const std::filesystem::path& path, const Machine& machine = {},
                        double idle_power_w = 0.0);
std::string study_to_csv(const ScalingStudy& study);

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);
void to_json(nlohmann::json& j, const ScalingStudy& s);
void from_json(const nlohmann::json& j, ScalingStudy& s);
void to_json(nlohmann::json& j, const TimeModel& m);
void to_json(nlohmann::json& j, const PowerModel& m);
void to_json(nlohmann::json& j, const EnergyCurve& c);
void to_json(nlohmann::json& j, const PowerSummary& s);

}  // namespace ergmeter::scaling
