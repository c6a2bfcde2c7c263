#include "ergmeter/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "ergmeter/error.hpp"
#include "text.hpp"

namespace ergmeter::attribution {

ComponentShare share_from_time(std::string name, double time_ms, const scaling::RunRecord& run) {
  if (!(time_ms >= 0.0)) throw Error(Errc::invalid_argument, "component time must be >= 0");
  return ComponentShare{std::move(name), time_ms / run.walltime_ms};
}

AttributionResult attribute(const scaling::RunRecord& full_run,
                            std::span<const ComponentShare> shares,
                            std::span<const ComponentPowerRef> power_refs) {
  if (!(full_run.walltime_ms > 0.0) || !(full_run.energy_j > 0.0)) {
    throw Error(Errc::invalid_argument, "full run needs positive walltime and energy");
  }
  std::map<std::string, const ComponentPowerRef*> refs;
  for (const auto& p : power_refs) {
    if (!(p.avg_power_w > 0.0)) {
      throw Error(Errc::invalid_argument, "power of '" + p.name + "' must be positive");
    }
    refs[p.name] = &p;
  }

  double share_sum = 0.0;
  for (const auto& s : shares) {
    if (!(s.time_share >= 0.0) || s.time_share > 1.0) {
      throw Error(Errc::invalid_argument, "time share of '" + s.name + "' outside [0,1]");
    }
    if (!refs.contains(s.name)) {
      throw Error(Errc::missing_power_ref, "no power reference for '" + s.name + "'");
    }
    share_sum += s.time_share;
  }
  // Shares must be disjoint phases of the run.
  if (share_sum > 1.0 + 1e-12) {
    throw Error(Errc::shares_exceed_unity,
                "time shares sum to " + detail::format_number(share_sum));
  }

  AttributionResult out;
  out.total_j = full_run.energy_j;
  const double walltime_s = full_run.walltime_s();
  double parts = 0.0;
  for (const auto& s : shares) {
    const auto* ref = refs.at(s.name);
    const double e = ref->avg_power_w * (s.time_share * walltime_s);
    out.per_component.push_back({s.name, e, e / out.total_j, s.time_share});
    parts += e;
    if (!ref->provenance.empty()) out.provenance.push_back(s.name + ": " + ref->provenance);
  }
  out.remainder_j = out.total_j - parts;
  if (out.remainder_j < -1e-9 * out.total_j) {
    throw Error(Errc::negative_remainder,
                "component energies exceed the run total by " +
                    detail::format_number(-out.remainder_j) + " J");
  }
  return out;
}

std::vector<PieSlice> pie_data(const AttributionResult& result) {
  std::vector<PieSlice> slices;
  for (const auto& c : result.per_component) slices.push_back({c.name, c.energy_fraction});
  std::stable_sort(slices.begin(), slices.end(),
                   [](const PieSlice& a, const PieSlice& b) { return a.fraction > b.fraction; });
  const double rest = result.remainder_fraction();
  if (rest > 0.0) slices.push_back({kRestSlice, rest});
  return slices;
}

void from_json(const nlohmann::json& j, AttributionInput& in) {
  in.full_run = j.at("full_run").get<scaling::RunRecord>();
  in.shares.clear();
  for (const auto& s : j.at("shares")) {
    const auto name = s.at("name").get<std::string>();
    if (s.contains("time_share")) {
      in.shares.push_back({name, s["time_share"].get<double>()});
    } else {
      in.shares.push_back(share_from_time(name, s.at("time_ms").get<double>(), in.full_run));
    }
  }
  in.power_refs.clear();
  for (const auto& p : j.at("power_refs")) {
    in.power_refs.push_back({p.at("name").get<std::string>(), p.at("avg_power_w").get<double>(),
                             p.value("provenance", std::string{})});
  }
}

void to_json(nlohmann::json& j, const AttributionResult& r) {
  auto comps = nlohmann::json::array();
  for (const auto& c : r.per_component) {
    comps.push_back({{"name", c.name},
                     {"energy_j", c.energy_j},
                     {"energy_fraction", c.energy_fraction},
                     {"time_share", c.time_share}});
  }
  j = nlohmann::json{{"per_component", comps},
                     {"remainder_j", r.remainder_j},
                     {"remainder_fraction", r.remainder_fraction()},
                     {"total_j", r.total_j},
                     {"provenance", r.provenance},
                     {"note", r.note}};
}

std::string pie_csv(std::span<const PieSlice> slices) {
  std::string out = "name,fraction\n";
  for (const auto& s : slices) {
    out += detail::csv_field(s.name) + ',' + detail::format_number(s.fraction) + '\n';
  }
  return out;
}

}  // namespace ergmeter::attribution
