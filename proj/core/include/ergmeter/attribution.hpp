#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ergmeter/scaling.hpp"

namespace ergmeter::attribution {

/// Fraction of the full run's walltime spent in one component.
struct ComponentShare {
  std::string name;
  double time_share = 0.0;
};

/// Average power of a component, measured standalone at the same parallel setup.
struct ComponentPowerRef {
  std::string name;
  double avg_power_w = 0.0;
  std::string provenance;  // free-form label of the source run
};

struct ComponentEnergy {
  std::string name;
  double energy_j = 0.0;
  double energy_fraction = 0.0;
  double time_share = 0.0;
};

inline constexpr const char* kCommunicationsNote =
    "attribution reflects computational workload only; communication energy is not measured";

struct AttributionResult {
  std::vector<ComponentEnergy> per_component;
  double remainder_j = 0.0;
  double total_j = 0.0;
  std::vector<std::string> provenance;
  std::string note = kCommunicationsNote;

  double remainder_fraction() const { return remainder_j / total_j; }
};

/// Convert an absolute component time into a share of the run's walltime.
ComponentShare share_from_time(std::string name, double time_ms, const scaling::RunRecord& run);

/// Component energy = avg power * (time share * full-run walltime); the rest
/// of the run's energy is reported as the remainder.
AttributionResult attribute(const scaling::RunRecord& full_run,
                            std::span<const ComponentShare> shares,
                            std::span<const ComponentPowerRef> power_refs);

struct PieSlice {
  std::string name;
  double fraction = 0.0;
};

inline constexpr const char* kRestSlice = "rest";

/// Components by descending fraction, then "rest" if anything remains.
std::vector<PieSlice> pie_data(const AttributionResult& result);

struct AttributionInput {
  scaling::RunRecord full_run;
  std::vector<ComponentShare> shares;
  std::vector<ComponentPowerRef> power_refs;
};

void from_json(const nlohmann::json& j, AttributionInput& in);
void to_json(nlohmann::json& j, const AttributionResult& r);
std::string pie_csv(std::span<const PieSlice> slices);

}  // namespace ergmeter::attribution
