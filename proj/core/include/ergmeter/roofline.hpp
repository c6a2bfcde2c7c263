#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ergmeter::roofline {

/// Machine parameters of the time roofline / energy arch-line model (SI units).
struct MachineEnergyParams {
  double pi_flops = 0.0;  // peak compute rate, flop/s
  double beta = 0.0;      // peak memory bandwidth, byte/s
  double eps_flop = 0.0;  // energy per flop, J
  double eps_mem = 0.0;   // energy per byte moved, J
  double pi0_w = 0.0;     // constant power, W

  void validate() const;
};

struct KernelSpec {
  double work_flops = 0.0;
  double traffic_bytes = 0.0;

  double intensity() const { return work_flops / traffic_bytes; }
};

struct BalanceReport {
  double b_tau = 0.0;  // time balance, flop/byte
  double b_eps = 0.0;  // energy balance (constant power excluded), flop/byte
  double gap = 0.0;    // b_eps / b_tau
};

enum class Bound { memory, compute };

struct Classification {
  Bound time_bound = Bound::memory;
  Bound energy_bound = Bound::memory;
  bool in_balance_gap = false;
};

struct TimeEnergy {
  double time_s = 0.0;
  double energy_j = 0.0;
};

/// min(pi, beta * I)
double perf_roofline(const MachineEnergyParams& params, double intensity);

/// T = max(W/pi, Q/beta); E = W eps_flop + Q eps_mem + pi0 T.
TimeEnergy kernel_time_energy(const MachineEnergyParams& params, const KernelSpec& kernel);

/// Flops per joule at intensity I; equals W/E of any kernel with that intensity.
double efficiency_archline(const MachineEnergyParams& params, double intensity);

/// Upper bound of the arch line, reached only as I grows without bound.
double efficiency_asymptote(const MachineEnergyParams& params);

BalanceReport balance_report(const MachineEnergyParams& params);

Classification classify(const MachineEnergyParams& params, double intensity);

/// Diagnostic, not part of the balance report: intensity at which the arch
/// line reaches half of its asymptote with constant power included.
double half_efficiency_intensity(const MachineEnergyParams& params);

struct CurveSample {
  double intensity = 0.0;
  double perf_flops = 0.0;
  double efficiency_flops_per_j = 0.0;
};

/// Log-spaced samples over [i_min, i_max].
std::vector<CurveSample> curve(const MachineEnergyParams& params, double i_min, double i_max,
                               int n_points);

inline constexpr const char* kCurveCsvHeader = "intensity,perf_flops,efficiency_flops_per_j";
std::string curve_csv(const std::vector<CurveSample>& samples);

std::string_view to_string(Bound b) noexcept;

void from_json(const nlohmann::json& j, MachineEnergyParams& p);
void to_json(nlohmann::json& j, const MachineEnergyParams& p);
void to_json(nlohmann::json& j, const BalanceReport& r);
void to_json(nlohmann::json& j, const Classification& c);

}  // namespace ergmeter::roofline
