#include "ergmeter/roofline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ergmeter/error.hpp"
#include "text.hpp"

namespace ergmeter::roofline {

namespace {

void require_intensity(double intensity) {
  if (!(intensity > 0.0)) throw Error(Errc::invalid_argument, "intensity must be positive");
}

}  // namespace

void MachineEnergyParams::validate() const {
  if (!(pi_flops > 0.0) || !(beta > 0.0) || !(eps_flop > 0.0) || !(eps_mem > 0.0)) {
    throw Error(Errc::invalid_argument, "pi_flops, beta, eps_flop and eps_mem must be positive");
  }
  if (!(pi0_w >= 0.0)) throw Error(Errc::invalid_argument, "pi0_w must be >= 0");
}

double perf_roofline(const MachineEnergyParams& params, double intensity) {
  require_intensity(intensity);
  return std::min(params.pi_flops, params.beta * intensity);
}

TimeEnergy kernel_time_energy(const MachineEnergyParams& params, const KernelSpec& kernel) {
  if (!(kernel.work_flops > 0.0) || !(kernel.traffic_bytes > 0.0)) {
    throw Error(Errc::invalid_argument, "kernel work and traffic must be positive");
  }
  TimeEnergy out;
  // Compute and memory overlap in time but their energies add.
  out.time_s = std::max(kernel.work_flops / params.pi_flops, kernel.traffic_bytes / params.beta);
  out.energy_j = kernel.work_flops * params.eps_flop + kernel.traffic_bytes * params.eps_mem +
                 params.pi0_w * out.time_s;
  return out;
}

double efficiency_archline(const MachineEnergyParams& params, double intensity) {
  require_intensity(intensity);
  return 1.0 / (params.eps_flop + params.eps_mem / intensity +
                params.pi0_w / std::min(params.pi_flops, params.beta * intensity));
}

double efficiency_asymptote(const MachineEnergyParams& params) {
  return 1.0 / (params.eps_flop + params.pi0_w / params.pi_flops);
}

BalanceReport balance_report(const MachineEnergyParams& params) {
  params.validate();
  BalanceReport r;
  r.b_tau = params.pi_flops / params.beta;
  r.b_eps = params.eps_mem / params.eps_flop;
  r.gap = r.b_eps / r.b_tau;
  return r;
}

Classification classify(const MachineEnergyParams& params, double intensity) {
  require_intensity(intensity);
  const auto b = balance_report(params);
  Classification c;
  c.time_bound = intensity >= b.b_tau ? Bound::compute : Bound::memory;
  c.energy_bound = intensity >= b.b_eps ? Bound::compute : Bound::memory;
  if (b.b_tau <= b.b_eps) {
    c.in_balance_gap = b.b_tau <= intensity && intensity < b.b_eps;
  } else {
    c.in_balance_gap = b.b_eps <= intensity && intensity < b.b_tau;
  }
  return c;
}

double half_efficiency_intensity(const MachineEnergyParams& params) {
  params.validate();
  const double target = 0.5 * efficiency_asymptote(params);
  // The arch is monotone in I; bisect in log space.
  double lo = 1e-12;
  double hi = 1.0;
  while (efficiency_archline(params, hi) < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (efficiency_archline(params, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-15) break;
  }
  return hi;
}

std::vector<CurveSample> curve(const MachineEnergyParams& params, double i_min, double i_max,
                               int n_points) {
  params.validate();
  if (!(i_min > 0.0) || !(i_max >= i_min) || n_points < 1) {
    throw Error(Errc::invalid_argument, "curve needs 0 < i_min <= i_max and n_points >= 1");
  }
  std::vector<CurveSample> out;
  out.reserve(static_cast<std::size_t>(n_points));
  const double l0 = std::log(i_min);
  const double l1 = std::log(i_max);
  for (int k = 0; k < n_points; ++k) {
    const double i = n_points == 1       ? i_min
                     : k == 0            ? i_min
                     : k == n_points - 1 ? i_max
                                         : std::exp(l0 + (l1 - l0) * k / (n_points - 1));
    out.push_back({i, perf_roofline(params, i), efficiency_archline(params, i)});
  }
  return out;
}

std::string curve_csv(const std::vector<CurveSample>& samples) {
  std::string out = std::string(kCurveCsvHeader) + "\n";
  for (const auto& s : samples) {
    out += detail::format_number(s.intensity) + ',' + detail::format_number(s.perf_flops) + ',' +
           detail::format_number(s.efficiency_flops_per_j) + '\n';
  }
  return out;
}

std::string_view to_string(Bound b) noexcept {
  return b == Bound::compute ? "compute" : "memory";
}

void from_json(const nlohmann::json& j, MachineEnergyParams& p) {
  p.pi_flops = j.at("pi_flops").get<double>();
  p.beta = j.at("beta").get<double>();
  p.eps_flop = j.at("eps_flop").get<double>();
  p.eps_mem = j.at("eps_mem").get<double>();
  p.pi0_w = j.value("pi0_w", 0.0);
}

void to_json(nlohmann::json& j, const MachineEnergyParams& p) {
  j = nlohmann::json{{"pi_flops", p.pi_flops},
                     {"beta", p.beta},
                     {"eps_flop", p.eps_flop},
                     {"eps_mem", p.eps_mem},
                     {"pi0_w", p.pi0_w}};
}

void to_json(nlohmann::json& j, const BalanceReport& r) {
  j = nlohmann::json{{"b_tau", r.b_tau}, {"b_eps", r.b_eps}, {"gap", r.gap}};
}

void to_json(nlohmann::json& j, const Classification& c) {
  j = nlohmann::json{{"time_bound", to_string(c.time_bound)},
                     {"energy_bound", to_string(c.energy_bound)},
                     {"in_balance_gap", c.in_balance_gap}};
}

}  // namespace ergmeter::roofline
