#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ergmeter::optics {

/// Optical coprocessor: SLM/camera channels, panel size and frame times.
struct OpticalSystemConfig {
  double power_w = 0.0;  // average system draw while running
  int channels = 1;      // independent SLM + camera systems
  int panel_w = 0;       // greyscale input resolution
  int panel_h = 0;
  double frame_time_greyscale_ms = 0.0;
  double frame_time_binary_ms = 0.0;

  void validate() const;
};

/// Frame times from component rates: greyscale frames are camera-limited,
/// binary frames follow the fast SLM (the camera is multiplexed).
struct ComponentRates {
  double camera_hz = 0.0;
  double binary_slm_hz = 0.0;
};
OpticalSystemConfig derive_config(double power_w, int channels, int panel_w, int panel_h,
                                  const ComponentRates& rates);

enum class OpKind { c2r_ft, r2c_ft, legendre_set, conv_pair };
enum class FrameClass { greyscale, binary };

struct DigitalEquivalent {
  int count = 0;  // number of digital operations one optical op replaces
  std::string description;
};

struct OpticalOpSpec {
  OpKind kind = OpKind::c2r_ft;
  int measurements = 1;  // intensity measurements (or frames) per result
  FrameClass frame_class = FrameClass::greyscale;
  std::optional<DigitalEquivalent> digital_equivalent;
};

/// The standard operation catalogue (C2R 2, R2C 4, Legendre set 4, convolution pair 1).
OpticalOpSpec standard_op(OpKind kind);
std::vector<OpticalOpSpec> standard_ops();
OpKind op_kind_from_string(std::string_view name);  // throws UnknownOp
std::string_view to_string(OpKind kind) noexcept;

struct OpCost {
  double time_ms = 0.0;
  double energy_mj = 0.0;
};

/// Greyscale ops spread measurements over the channels; binary ops do not.
OpCost op_cost(const OpticalSystemConfig& config, const OpticalOpSpec& op);

/// Cost per replaced digital operation; throws NoDigitalEquivalent.
OpCost digital_equivalent_cost(const OpticalSystemConfig& config, const OpticalOpSpec& op);

/// Most uniform tiles of grid_w x grid_h (in either orientation) fitting the panel.
int pack_count(int panel_w, int panel_h, int grid_w, int grid_h);

struct WorkloadSpec {
  int n_transform_pairs = 0;  // one forward + one inverse each
  int grid_w = 0;
  int grid_h = 0;
  int vertical_levels = 0;  // informational
  std::string note;
};

struct WorkloadComparison {
  double delta_t_s = 0.0;
  double delta_e_j = 0.0;
  double avg_power_w = 0.0;
  int packed = 0;
  double per_pair_ms = 0.0;
};

/// Time and energy for a forward+inverse transform workload, amortised over
/// the grids packed onto one panel. Throws GridDoesNotFit.
WorkloadComparison workload_compare(const OpticalSystemConfig& config,
                                    const WorkloadSpec& workload);

double round_significant(double value, int digits);

/// Display column: time rounded to 0.1 ms and
/// energy recomputed from the rounded time. Computation elsewhere is exact.
OpCost display_rounded(const OpticalSystemConfig& config, const OpCost& exact);

/// Display form of a comparison: delta t to three significant digits and the
/// energy recomputed from it, also to three significant digits.
WorkloadComparison display_rounded(const WorkloadComparison& exact);

OpticalSystemConfig load_config(const std::filesystem::path& path);

void from_json(const nlohmann::json& j, OpticalSystemConfig& c);
void to_json(nlohmann::json& j, const OpticalSystemConfig& c);
void to_json(nlohmann::json& j, const WorkloadComparison& c);

inline constexpr const char* kComparisonCsvHeader = "label,t_s,e_j,avg_power_w";
std::string comparison_csv(const WorkloadComparison& c, const std::string& label = "optical");

}  // namespace ergmeter::optics
