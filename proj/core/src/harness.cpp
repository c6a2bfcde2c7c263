#include "ergmeter/harness.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "process.hpp"
#include "text.hpp"

namespace ergmeter::harness {

using counters::CounterBackend;
using counters::CounterSample;

InvalidRunError::InvalidRunError(MeasurementRecord record, const std::string& what)
    : Error(Errc::invalid_run, what), record_(std::move(record)) {}

double SteadyClock::now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void SteadyClock::sleep_for(double seconds) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

namespace {

std::vector<CounterSample> read_all(std::span<CounterBackend* const> backends) {
  std::vector<CounterSample> out;
  out.reserve(backends.size());
  for (auto* b : backends) out.push_back(b->read_sample());
  return out;
}

void require_backends(std::span<CounterBackend* const> backends) {
  if (backends.empty()) {
    throw Error(Errc::invalid_argument, "at least one counter backend is required");
  }
  for (auto* b : backends) {
    if (b == nullptr) throw Error(Errc::invalid_argument, "null counter backend");
  }
}

// Periodically samples cumulative energy while the child runs.
class TraceSampler {
 public:
  TraceSampler(std::span<CounterBackend* const> backends, const std::vector<CounterSample>& before,
               double hz, std::chrono::steady_clock::time_point t0)
      : backends_(backends), before_(before), period_(1.0 / hz), t0_(t0) {
    points_.push_back({0.0, 0.0});
    thread_ = std::jthread([this](std::stop_token st) { run(st); });
  }

  std::vector<TracePoint> finish() {
    thread_.request_stop();
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
    return std::move(points_);
  }

 private:
  void run(std::stop_token st) {
    auto next = t0_;
    std::unique_lock lock(mutex_);
    while (!st.stop_requested()) {
      next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(period_));
      cv_.wait_until(lock, st, next, [] { return false; });
      if (st.stop_requested()) break;
      double cumulative = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < backends_.size(); ++i) {
        const auto s = backends_[i]->read_sample();
        try {
          cumulative += counters::energy_delta(before_[i], s, backends_[i]->wrap_range_uj());
        } catch (const Error&) {
          ok = false;  // epoch changed; the final check invalidates the run
        }
      }
      if (!ok) continue;
      const double t =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
      points_.push_back({t, cumulative});
    }
  }

  std::span<CounterBackend* const> backends_;
  const std::vector<CounterSample>& before_;
  double period_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<TracePoint> points_;
  std::mutex mutex_;
  std::condition_variable_any cv_;
  std::jthread thread_;
};

MeasurementRecord measure_once(const std::vector<std::string>& command,
                               std::span<CounterBackend* const> backends,
                               const MeasureOptions& options) {
  MeasurementRecord rec;
  rec.command = command;

  const auto before = read_all(backends);
  const auto t0 = std::chrono::steady_clock::now();
  const pid_t pid = detail::spawn_process(command);

  std::optional<TraceSampler> sampler;
  if (options.sample_hz) sampler.emplace(backends, before, *options.sample_hz, t0);

  rec.exit_status = detail::wait_process(pid);
  const auto t1 = std::chrono::steady_clock::now();
  std::vector<TracePoint> trace;
  if (sampler) trace = sampler->finish();
  const auto after = read_all(backends);

  rec.walltime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  std::string invalid_reason;
  for (std::size_t i = 0; i < backends.size(); ++i) {
    double e = 0.0;
    try {
      e = counters::energy_delta(before[i], after[i], backends[i]->wrap_range_uj());
    } catch (const Error& err) {
      if (err.code() != Errc::startup_changed) throw;
      rec.valid = false;
      if (invalid_reason.empty()) invalid_reason = backends[i]->id() + ": " + err.what();
    }
    rec.per_backend.push_back({backends[i]->id(), e});
    rec.energy_j += e;
  }

  if (options.sample_hz) {
    trace.push_back({rec.walltime_ms / 1000.0, rec.energy_j});
    rec.trace = std::move(trace);
  }
  if (rec.walltime_ms < options.min_duration_warn_s * 1000.0) {
    rec.warnings.emplace_back(kWarnLowConfidence);
  }
  if (rec.exit_status != 0) rec.warnings.emplace_back(kWarnCommandFailed);

  if (!rec.valid) throw InvalidRunError(std::move(rec), invalid_reason);
  return rec;
}

}  // namespace

MeasurementRecord measure(const std::vector<std::string>& command,
                          std::span<CounterBackend* const> backends,
                          const MeasureOptions& options) {
  if (command.empty()) throw Error(Errc::invalid_argument, "command must not be empty");
  require_backends(backends);
  if (options.repeats < 1) throw Error(Errc::invalid_argument, "repeats must be >= 1");
  if (options.sample_hz && !(*options.sample_hz > 0.0)) {
    throw Error(Errc::invalid_argument, "sample_hz must be positive");
  }

  if (options.repeats == 1) return measure_once(command, backends, options);

  std::vector<MeasurementRecord> runs;
  runs.reserve(static_cast<std::size_t>(options.repeats));
  for (int i = 0; i < options.repeats; ++i) {
    runs.push_back(measure_once(command, backends, options));
  }
  auto agg = aggregate(runs);
  agg.trace = runs.front().trace;
  return agg;
}

BaselineRecord measure_idle(std::span<CounterBackend* const> backends, double duration_s,
                            Clock& clock) {
  if (!(duration_s > 0.0)) {
    throw Error(Errc::invalid_duration, "idle duration must be positive");
  }
  require_backends(backends);

  const auto before = read_all(backends);
  const double t0 = clock.now();
  clock.sleep_for(duration_s);
  const double t1 = clock.now();
  const auto after = read_all(backends);

  BaselineRecord rec;
  for (std::size_t i = 0; i < backends.size(); ++i) {
    try {
      rec.energy_j += counters::energy_delta(before[i], after[i], backends[i]->wrap_range_uj());
    } catch (const Error& err) {
      if (err.code() != Errc::startup_changed) throw;
      throw Error(Errc::invalid_run, std::string("idle baseline invalidated: ") + err.what());
    }
  }
  rec.duration_s = t1 - t0;
  rec.idle_power_w = rec.energy_j / rec.duration_s;
  return rec;
}

BaselineRecord measure_idle(std::span<CounterBackend* const> backends, double duration_s) {
  SteadyClock clock;
  return measure_idle(backends, duration_s, clock);
}

MeasurementRecord aggregate(std::span<const MeasurementRecord> records) {
  if (records.empty()) throw Error(Errc::no_valid_records, "nothing to aggregate");

  const auto& ref = records.front();
  auto backend_ids = [](const MeasurementRecord& r) {
    std::vector<std::string> ids;
    for (const auto& b : r.per_backend) ids.push_back(b.backend);
    return ids;
  };
  const auto ref_ids = backend_ids(ref);
  for (const auto& r : records) {
    if (r.command != ref.command) {
      throw Error(Errc::mixed_commands, "records are for different commands");
    }
    if (backend_ids(r) != ref_ids) {
      throw Error(Errc::mixed_commands, "records use different backend sets");
    }
  }

  std::vector<const MeasurementRecord*> valid;
  for (const auto& r : records) {
    if (r.valid) valid.push_back(&r);
  }
  if (valid.empty()) throw Error(Errc::no_valid_records, "every record is invalid");

  const auto n = static_cast<double>(valid.size());
  auto stats = [&](auto field) {
    double sum = 0.0;
    double lo = field(*valid.front());
    double hi = lo;
    for (const auto* r : valid) {
      const double v = field(*r);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::pair{sum / n, (hi - lo) / 2.0};
  };

  MeasurementRecord out;
  out.command = ref.command;
  for (std::size_t i = 0; i < ref_ids.size(); ++i) {
    const auto [mean, half] = stats([i](const MeasurementRecord& r) { return r.per_backend[i].energy_j; });
    (void)half;
    out.per_backend.push_back({ref_ids[i], mean});
    out.energy_j += mean;
  }
  const auto [mean_j, half_j] = stats([](const MeasurementRecord& r) { return r.energy_j; });
  const auto [mean_ms, half_ms] = stats([](const MeasurementRecord& r) { return r.walltime_ms; });
  out.walltime_ms = mean_ms;
  out.repeats = RepeatStats{mean_j, half_j, mean_ms, half_ms, static_cast<int>(valid.size())};
  out.valid = true;
  for (const auto* r : valid) {
    if (out.exit_status == 0) out.exit_status = r->exit_status;
    for (const auto& w : r->warnings) {
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) {
        out.warnings.push_back(w);
      }
    }
  }
  return out;
}

std::string to_csv_row(const MeasurementRecord& r) {
  std::string cmd;
  for (const auto& part : r.command) {
    if (!cmd.empty()) cmd += ' ';
    cmd += part;
  }
  return detail::csv_field(cmd) + ',' + detail::format_number(r.walltime_ms) + ',' +
         detail::format_number(r.energy_j) + ',' + detail::format_number(r.power_w()) + ',' +
         (r.valid ? "true" : "false") + ',' + std::to_string(r.exit_status);
}

void to_json(nlohmann::json& j, const MeasurementRecord& r) {
  j = nlohmann::json::object();
  j["command"] = r.command;
  j["walltime_ms"] = r.walltime_ms;
  j["energy_j"] = r.energy_j;
  auto per = nlohmann::json::array();
  for (const auto& b : r.per_backend) per.push_back({{"backend", b.backend}, {"energy_j", b.energy_j}});
  j["per_backend"] = per;
  j["exit_status"] = r.exit_status;
  if (r.trace) {
    auto tr = nlohmann::json::array();
    for (const auto& p : *r.trace) tr.push_back({{"t_s", p.t_s}, {"cumulative_j", p.cumulative_j}});
    j["trace"] = tr;
  } else {
    j["trace"] = nullptr;
  }
  j["valid"] = r.valid;
  if (r.repeats) {
    const auto& s = *r.repeats;
    j["repeats"] = {{"mean_j", s.mean_j},   {"halfrange_j", s.halfrange_j}, {"mean_ms", s.mean_ms},
                    {"halfrange_ms", s.halfrange_ms}, {"n", s.n}};
  } else {
    j["repeats"] = nullptr;
  }
  j["warnings"] = r.warnings;
}

void from_json(const nlohmann::json& j, MeasurementRecord& r) {
  r = MeasurementRecord{};
  r.command = j.at("command").get<std::vector<std::string>>();
  r.walltime_ms = j.at("walltime_ms").get<double>();
  r.energy_j = j.at("energy_j").get<double>();
  for (const auto& b : j.at("per_backend")) {
    r.per_backend.push_back({b.at("backend").get<std::string>(), b.at("energy_j").get<double>()});
  }
  r.exit_status = j.at("exit_status").get<int>();
  if (j.contains("trace") && !j["trace"].is_null()) {
    std::vector<TracePoint> tr;
    for (const auto& p : j["trace"]) {
      tr.push_back({p.at("t_s").get<double>(), p.at("cumulative_j").get<double>()});
    }
    r.trace = std::move(tr);
  }
  r.valid = j.at("valid").get<bool>();
  if (j.contains("repeats") && !j["repeats"].is_null()) {
    const auto& s = j["repeats"];
    r.repeats = RepeatStats{s.at("mean_j").get<double>(), s.at("halfrange_j").get<double>(),
                            s.at("mean_ms").get<double>(), s.at("halfrange_ms").get<double>(),
                            s.at("n").get<int>()};
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const BaselineRecord& r) {
  j = nlohmann::json{{"idle_power_w", r.idle_power_w},
                     {"duration_s", r.duration_s},
                     {"energy_j", r.energy_j}};
}

}  // namespace ergmeter::harness
