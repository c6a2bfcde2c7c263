#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ergmeter/attribution.hpp"
#include "ergmeter/roofline.hpp"
#include "ergmeter/scaling.hpp"

namespace ergmeter::report {

enum class PlotKind { energy_walltime, power_cores, pie, roofline };
enum class Format { csv, json, svg };

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;

  bool operator==(const PlotPoint&) const = default;
};

/// A named point list. For pie plots each series is one pie: point x is the
/// slice fraction, point label the slice name, y unused.
struct Series {
  std::string name;
  std::vector<PlotPoint> points;
  bool connect = true;  // draw a polyline through the points

  bool operator==(const Series&) const = default;
};

enum class OverlayKind { iso_power, idle_line, point, vline };

/// iso_power/idle_line use `power_w`; point uses (x, y, label); vline uses x.
struct Overlay {
  OverlayKind kind = OverlayKind::iso_power;
  double power_w = 0.0;
  double x = 0.0;
  double y = 0.0;
  std::string label;

  static Overlay iso_power(double p) { return {OverlayKind::iso_power, p, 0, 0, {}}; }
  static Overlay idle_line(double p) { return {OverlayKind::idle_line, p, 0, 0, "idle"}; }
  static Overlay point(std::string label, double x, double y) {
    return {OverlayKind::point, 0, x, y, std::move(label)};
  }
  static Overlay vline(std::string label, double x) {
    return {OverlayKind::vline, 0, x, 0, std::move(label)};
  }

  bool operator==(const Overlay&) const = default;
};

struct Axes {
  bool log_x = true;
  bool log_y = true;
  std::string x_label;
  std::string y_label;

  bool operator==(const Axes&) const = default;
};

struct PlotSpec {
  PlotKind kind = PlotKind::energy_walltime;
  std::string title;
  std::vector<Series> series;
  std::vector<Overlay> overlays;
  Axes axes;

  /// Throws InvalidArgument (empty series) or NonPositiveOnLogAxis.
  void validate() const;

  bool operator==(const PlotSpec&) const = default;
};

inline constexpr int kOverlaySamples = 16;
inline constexpr const char* kOpticalLabel = "optical";

/// Overlay line samples spanning the plot's x range; E = P * t holds exactly
/// up to floating-point rounding of the product.
std::vector<PlotPoint> overlay_samples(const PlotSpec& plot, const Overlay& overlay);

std::string to_csv(const PlotSpec& plot);
std::string to_svg(const PlotSpec& plot);
std::string to_json_text(const PlotSpec& plot);
PlotSpec plot_from_json_text(std::string_view text);
PlotSpec load_plot(const std::filesystem::path& path);

/// Render in `format` and write atomically (temp file + rename).
void export_plot(const PlotSpec& plot, Format format, const std::filesystem::path& path);

/// Write `contents` atomically; throws IoWrite.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

struct OpticsPoint {
  double t_s = 0.0;
  double energy_j = 0.0;
};

/// Energy vs walltime, one series per OMP thread count, points labelled
/// "<mpi>×<omp>". Throws EmptyStudy.
PlotSpec build_energy_walltime_plot(const scaling::ScalingStudy& study, double idle_power_w,
                                    std::span<const double> iso_powers,
                                    std::optional<OpticsPoint> optics_point = std::nullopt);

PlotSpec build_power_cores_plot(const scaling::ScalingStudy& study);

struct PieChart {
  std::string title;
  std::vector<attribution::PieSlice> slices;
};
PlotSpec build_pie_plot(std::span<const PieChart> pies);

/// Roofline and arch line, each normalised to its own peak, with balance markers.
PlotSpec build_roofline_plot(const roofline::MachineEnergyParams& params, double i_min,
                             double i_max, int n_points);

std::string_view to_string(PlotKind kind) noexcept;
PlotKind plot_kind_from_string(std::string_view name);
Format format_from_string(std::string_view name);

void to_json(nlohmann::json& j, const PlotSpec& p);
void from_json(const nlohmann::json& j, PlotSpec& p);

}  // namespace ergmeter::report
