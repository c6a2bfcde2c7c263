#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ergmeter/counters.hpp"
#include "ergmeter/error.hpp"
#include "monotonic.hpp"

namespace ergmeter::counters {

void SyntheticScript::validate() const {
  if (segments.empty()) {
    throw Error(Errc::invalid_argument, "synthetic script needs at least one segment");
  }
  for (const auto& seg : segments) {
    if (!(seg.duration_s > 0.0) || !std::isfinite(seg.duration_s)) {
      throw Error(Errc::invalid_argument, "segment duration must be positive");
    }
    if (!(seg.power_w >= 0.0) || !std::isfinite(seg.power_w)) {
      throw Error(Errc::invalid_argument, "segment power must be non-negative");
    }
  }
  if (!(update_hz > 0.0) || !std::isfinite(update_hz)) {
    throw Error(Errc::invalid_argument, "update_hz must be positive");
  }
  for (double t : startup_events) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw Error(Errc::invalid_argument, "startup events must be non-negative times");
    }
  }
}

double SyntheticScript::integral(double t0, double t1) const {
  t0 = std::max(t0, 0.0);
  if (!(t1 > t0)) return 0.0;
  double total = 0.0;
  double start = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const bool last = i + 1 == segments.size();
    const double end = last ? std::max(t1, start + segments[i].duration_s)
                            : start + segments[i].duration_s;
    const double lo = std::max(start, t0);
    const double hi = std::min(end, t1);
    if (hi > lo) total += segments[i].power_w * (hi - lo);
    start = end;
    if (start >= t1) break;
  }
  return total;
}

double SyntheticScript::power_at(double t) const {
  double start = 0.0;
  for (const auto& seg : segments) {
    if (t < start + seg.duration_s) return seg.power_w;
    start += seg.duration_s;
  }
  return segments.empty() ? 0.0 : segments.back().power_w;
}

double SyntheticScript::max_power() const {
  double p = 0.0;
  for (const auto& seg : segments) p = std::max(p, seg.power_w);
  return p;
}

SyntheticScript load_synthetic_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_unreadable, "cannot open synthetic script " + path.string());
  }
  SyntheticScript script;
  try {
    script = nlohmann::json::parse(in).get<SyntheticScript>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, path.string() + ": " + e.what());
  }
  script.validate();
  return script;
}

void to_json(nlohmann::json& j, const CounterSample& s) {
  j = nlohmann::json{{"energy_joules", s.energy_joules},
                     {"startup_token", s.startup_token},
                     {"read_at", s.read_at}};
}

void to_json(nlohmann::json& j, const SyntheticScript& s) {
  auto segs = nlohmann::json::array();
  for (const auto& seg : s.segments) {
    segs.push_back({{"duration_s", seg.duration_s}, {"power_w", seg.power_w}});
  }
  j = nlohmann::json{{"segments", segs},
                     {"startup_events", s.startup_events},
                     {"update_hz", s.update_hz}};
}

void from_json(const nlohmann::json& j, SyntheticScript& s) {
  s.segments.clear();
  for (const auto& seg : j.at("segments")) {
    s.segments.push_back({seg.at("duration_s").get<double>(), seg.at("power_w").get<double>()});
  }
  s.startup_events = j.value("startup_events", std::vector<double>{});
  s.update_hz = j.value("update_hz", 10.0);
}

// --- backend --------------------------------------------------------------

SyntheticBackend::SyntheticBackend(SyntheticScript script, ClockMode mode, std::string id)
    : script_(std::move(script)),
      mode_(mode),
      id_(std::move(id)),
      origin_(std::chrono::steady_clock::now()) {
  script_.validate();
  std::sort(script_.startup_events.begin(), script_.startup_events.end());
}

double SyntheticBackend::now_locked() const {
  double t = offset_s_;
  if (mode_ == ClockMode::real_time) {
    t += std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  return t;
}

double SyntheticBackend::now() const {
  std::lock_guard lock(mutex_);
  return now_locked();
}

void SyntheticBackend::advance(double dt_s) {
  if (!(dt_s >= 0.0)) {
    throw Error(Errc::invalid_argument, "cannot advance by a negative interval");
  }
  std::lock_guard lock(mutex_);
  offset_s_ += dt_s;
}

CounterSample SyntheticBackend::sample_at(double t) const {
  const auto& events = script_.startup_events;
  const auto crossed = std::upper_bound(events.begin(), events.end(), t);
  const auto token = static_cast<std::int64_t>(crossed - events.begin());
  const double epoch_start = crossed == events.begin() ? 0.0 : *(crossed - 1);

  // Counter refreshes on a fixed tick grid; the slack absorbs t*h landing
  // a hair below an integer.
  const double h = script_.update_hz;
  const double tick = std::floor(t * h + 1e-9) / h;
  const double energy = tick > epoch_start ? script_.integral(epoch_start, tick) : 0.0;
  return CounterSample{energy, token, t};
}

CounterSample SyntheticBackend::read_sample() {
  std::lock_guard lock(mutex_);
  CounterSample s = sample_at(now_locked());
  s.read_at = detail::strictly_after(last_read_at_, s.read_at);
  last_read_at_ = s.read_at;
  return s;
}

void synth_advance(SyntheticBackend& backend, double dt_s) { backend.advance(dt_s); }

}  // namespace ergmeter::counters
