#include "ergmeter/optics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ergmeter/error.hpp"
#include "text.hpp"

namespace ergmeter::optics {

void OpticalSystemConfig::validate() const {
  if (!(power_w > 0.0) || channels < 1 || panel_w < 1 || panel_h < 1 ||
      !(frame_time_greyscale_ms > 0.0) || !(frame_time_binary_ms > 0.0)) {
    throw Error(Errc::invalid_argument, "optical system config fields must all be positive");
  }
}

OpticalSystemConfig derive_config(double power_w, int channels, int panel_w, int panel_h,
                                  const ComponentRates& rates) {
  if (!(rates.camera_hz > 0.0) || !(rates.binary_slm_hz > 0.0)) {
    throw Error(Errc::invalid_argument, "component rates must be positive");
  }
  OpticalSystemConfig c{power_w,
                        channels,
                        panel_w,
                        panel_h,
                        1000.0 / rates.camera_hz,
                        1000.0 / rates.binary_slm_hz};
  c.validate();
  return c;
}

OpticalOpSpec standard_op(OpKind kind) {
  switch (kind) {
    case OpKind::c2r_ft: return {kind, 2, FrameClass::greyscale, std::nullopt};
    case OpKind::r2c_ft: return {kind, 4, FrameClass::greyscale, std::nullopt};
    case OpKind::legendre_set: return {kind, 4, FrameClass::binary, std::nullopt};
    case OpKind::conv_pair:
      return {kind, 1, FrameClass::binary, DigitalEquivalent{4, "2048x1536 complex 2D FT"}};
  }
  throw Error(Errc::unknown_op, "unknown optical operation");
}

std::vector<OpticalOpSpec> standard_ops() {
  return {standard_op(OpKind::c2r_ft), standard_op(OpKind::r2c_ft),
          standard_op(OpKind::legendre_set), standard_op(OpKind::conv_pair)};
}

std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::c2r_ft: return "c2r_ft";
    case OpKind::r2c_ft: return "r2c_ft";
    case OpKind::legendre_set: return "legendre_set";
    case OpKind::conv_pair: return "conv_pair";
  }
  return "unknown";
}

OpKind op_kind_from_string(std::string_view name) {
  for (auto k : {OpKind::c2r_ft, OpKind::r2c_ft, OpKind::legendre_set, OpKind::conv_pair}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::unknown_op, "unknown optical operation '" + std::string(name) + "'");
}

OpCost op_cost(const OpticalSystemConfig& config, const OpticalOpSpec& op) {
  config.validate();
  if (op.measurements < 1) throw Error(Errc::invalid_argument, "measurements must be >= 1");
  double time_ms = 0.0;
  switch (op.frame_class) {
    case FrameClass::greyscale: {
      // Each channel takes one measurement per camera frame.
      const int cycles = (op.measurements + config.channels - 1) / config.channels;
      time_ms = cycles * config.frame_time_greyscale_ms;
      break;
    }
    case FrameClass::binary:
      // Only one filter path is populated, so the spare channel does not help.
      time_ms = op.measurements * config.frame_time_binary_ms;
      break;
  }
  return OpCost{time_ms, config.power_w * time_ms};
}

OpCost digital_equivalent_cost(const OpticalSystemConfig& config, const OpticalOpSpec& op) {
  if (!op.digital_equivalent || op.digital_equivalent->count < 1) {
    throw Error(Errc::no_digital_equivalent,
                std::string(to_string(op.kind)) + " has no digital equivalent");
  }
  const auto total = op_cost(config, op);
  const double per_ft_ms = total.time_ms / op.digital_equivalent->count;
  return OpCost{per_ft_ms, config.power_w * per_ft_ms};
}

int pack_count(int panel_w, int panel_h, int grid_w, int grid_h) {
  if (panel_w < 1 || panel_h < 1 || grid_w < 1 || grid_h < 1) {
    throw Error(Errc::invalid_argument, "panel and grid dimensions must be positive");
  }
  const long long upright = static_cast<long long>(panel_w / grid_w) * (panel_h / grid_h);
  const long long rotated = static_cast<long long>(panel_w / grid_h) * (panel_h / grid_w);
  return static_cast<int>(std::max(upright, rotated));
}

WorkloadComparison workload_compare(const OpticalSystemConfig& config,
                                    const WorkloadSpec& workload) {
  config.validate();
  if (workload.n_transform_pairs < 0) {
    throw Error(Errc::invalid_argument, "transform pair count must be >= 0");
  }
  const int packed = pack_count(config.panel_w, config.panel_h, workload.grid_w, workload.grid_h);
  if (packed == 0) {
    throw Error(Errc::grid_does_not_fit,
                std::to_string(workload.grid_w) + "x" + std::to_string(workload.grid_h) +
                    " grid does not fit a " + std::to_string(config.panel_w) + "x" +
                    std::to_string(config.panel_h) + " panel");
  }
  WorkloadComparison out;
  out.packed = packed;
  out.avg_power_w = config.power_w;
  out.per_pair_ms = op_cost(config, standard_op(OpKind::r2c_ft)).time_ms +
                    op_cost(config, standard_op(OpKind::c2r_ft)).time_ms;
  const double delta_ms = workload.n_transform_pairs * out.per_pair_ms / packed;
  out.delta_t_s = delta_ms / 1000.0;
  out.delta_e_j = config.power_w * out.delta_t_s;
  return out;
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
  const double scale = std::pow(10.0, digits - 1 - exponent);
  return std::round(value * scale) / scale;
}

OpCost display_rounded(const OpticalSystemConfig& config, const OpCost& exact) {
  const double t = std::round(exact.time_ms * 10.0) / 10.0;
  return OpCost{t, config.power_w * t};
}

WorkloadComparison display_rounded(const WorkloadComparison& exact) {
  WorkloadComparison out = exact;
  out.delta_t_s = round_significant(exact.delta_t_s, 3);
  out.delta_e_j = round_significant(exact.avg_power_w * out.delta_t_s, 3);
  return out;
}

OpticalSystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open " + path.string());
  OpticalSystemConfig c;
  try {
    c = nlohmann::json::parse(in).get<OpticalSystemConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void from_json(const nlohmann::json& j, OpticalSystemConfig& c) {
  c.power_w = j.at("power_w").get<double>();
  c.channels = j.at("channels").get<int>();
  c.panel_w = j.at("panel_w").get<int>();
  c.panel_h = j.at("panel_h").get<int>();
  c.frame_time_greyscale_ms = j.at("frame_time_greyscale_ms").get<double>();
  c.frame_time_binary_ms = j.at("frame_time_binary_ms").get<double>();
}

void to_json(nlohmann::json& j, const OpticalSystemConfig& c) {
  j = nlohmann::json{{"power_w", c.power_w},
                     {"channels", c.channels},
                     {"panel_w", c.panel_w},
                     {"panel_h", c.panel_h},
                     {"frame_time_greyscale_ms", c.frame_time_greyscale_ms},
                     {"frame_time_binary_ms", c.frame_time_binary_ms}};
}

void to_json(nlohmann::json& j, const WorkloadComparison& c) {
  j = nlohmann::json{{"delta_t_s", c.delta_t_s},
                     {"delta_e_j", c.delta_e_j},
                     {"avg_power_w", c.avg_power_w},
                     {"packed", c.packed},
                     {"per_pair_ms", c.per_pair_ms}};
}

std::string comparison_csv(const WorkloadComparison& c, const std::string& label) {
  return std::string(kComparisonCsvHeader) + "\n" + detail::csv_field(label) + ',' +
         detail::format_number(c.delta_t_s) + ',' + detail::format_number(c.delta_e_j) + ',' +
         detail::format_number(c.avg_power_w) + '\n';
}

}  // namespace ergmeter::optics
