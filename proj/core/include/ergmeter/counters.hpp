#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ergmeter::counters {

/// One reading of an accumulated-energy counter.
///
/// `energy_joules` is relative to the epoch identified by `startup_token`;
/// two samples are only comparable when their tokens match.
struct CounterSample {
  double energy_joules = 0.0;
  std::int64_t startup_token = 0;
  double read_at = 0.0;  // monotonic seconds

  bool operator==(const CounterSample&) const = default;
};

enum class BackendKind { pm_dir, powercap, synthetic };

struct PowerSegment {
  double duration_s = 0.0;
  double power_w = 0.0;
};

/// Piecewise-constant power profile driving the synthetic backend.
///
/// Power beyond the last segment holds at the last segment's value. The
/// counter updates at `update_hz`; reported energy is the integral of power
/// from the current epoch start up to the most recent update tick.
struct SyntheticScript {
  std::vector<PowerSegment> segments;
  std::vector<double> startup_events;
  double update_hz = 10.0;

  void validate() const;
  /// Exact integral of the profile over [t0, t1] (joules).
  double integral(double t0, double t1) const;
  /// Instantaneous power at t.
  double power_at(double t) const;
  double max_power() const;
};

SyntheticScript load_synthetic_script(const std::filesystem::path& path);

struct BackendDescriptor {
  BackendKind kind = BackendKind::pm_dir;
  std::filesystem::path path;
  std::optional<std::int64_t> wrap_range_uj;
  double update_hz = 10.0;
  std::optional<SyntheticScript> script;  // synthetic only
};

std::string_view to_string(BackendKind kind) noexcept;
BackendKind backend_kind_from_string(std::string_view name);

/// A source of counter samples. Reads on one instance are serialized.
class CounterBackend {
 public:
  virtual ~CounterBackend() = default;

  virtual CounterSample read_sample() = 0;
  virtual std::optional<std::int64_t> wrap_range_uj() const { return std::nullopt; }
  virtual double update_hz() const = 0;
  virtual const std::string& id() const = 0;
};

/// Reads `<dir>/energy` and `<dir>/startup`, the node-level PM counter layout.
///
/// Every sample brackets the energy read between two startup reads; a
/// mismatch is retried up to three times before reporting TornRead.
class PmDirBackend final : public CounterBackend {
 public:
  using FileReader = std::function<std::string(const std::filesystem::path&)>;

  static constexpr int kTornReadRetries = 3;

  explicit PmDirBackend(std::filesystem::path dir, double update_hz = 10.0,
                        FileReader reader = {});

  CounterSample read_sample() override;
  double update_hz() const override { return update_hz_; }
  const std::string& id() const override { return id_; }

 private:
  std::filesystem::path dir_;
  double update_hz_;
  FileReader reader_;
  std::string id_;
  std::mutex mutex_;
  double last_read_at_ = -1.0;
};

/// Linux powercap-style counter: `<dir>/energy_uj`, optional
/// `<dir>/max_energy_range_uj`. The startup token is always 0.
class PowercapBackend final : public CounterBackend {
 public:
  explicit PowercapBackend(std::filesystem::path dir,
                           std::optional<std::int64_t> wrap_range_uj = std::nullopt,
                           double update_hz = 10.0);

  CounterSample read_sample() override;
  std::optional<std::int64_t> wrap_range_uj() const override { return wrap_range_uj_; }
  double update_hz() const override { return update_hz_; }
  const std::string& id() const override { return id_; }

 private:
  std::filesystem::path dir_;
  std::optional<std::int64_t> wrap_range_uj_;
  double update_hz_;
  std::string id_;
  std::mutex mutex_;
  double last_read_at_ = -1.0;
};

/// Deterministic backend replaying a SyntheticScript.
///
/// In `virtual_clock` mode time only moves through advance(). In
/// `real_time` mode the script clock also follows std::chrono::steady_clock
/// from construction, so it can bracket real child processes.
class SyntheticBackend final : public CounterBackend {
 public:
  enum class ClockMode { virtual_clock, real_time };

  explicit SyntheticBackend(SyntheticScript script,
                            ClockMode mode = ClockMode::virtual_clock,
                            std::string id = "synthetic");

  CounterSample read_sample() override;
  double update_hz() const override { return script_.update_hz; }
  const std::string& id() const override { return id_; }

  void advance(double dt_s);
  double now() const;
  const SyntheticScript& script() const { return script_; }

  /// Sample the script would report at virtual time t, without touching state.
  CounterSample sample_at(double t) const;

 private:
  double now_locked() const;

  SyntheticScript script_;
  ClockMode mode_;
  std::string id_;
  std::chrono::steady_clock::time_point origin_;
  double offset_s_ = 0.0;
  mutable std::mutex mutex_;
  double last_read_at_ = -1.0;
};

/// Advance a synthetic backend's virtual clock.
void synth_advance(SyntheticBackend& backend, double dt_s);

std::unique_ptr<CounterBackend> open_backend(const BackendDescriptor& desc);

/// Energy consumed between two samples of the same counter.
///
/// Throws StartupChanged when the samples belong to different epochs and
/// NegativeDelta when the counter went backwards without a wrap range.
double energy_delta(const CounterSample& before, const CounterSample& after,
                    std::optional<std::int64_t> wrap_range_uj = std::nullopt);

/// Parse an ASCII decimal counter file body. Trailing whitespace and an
/// optional unit word (e.g. "J") are accepted.
std::int64_t parse_counter_text(std::string_view text, const std::string& what);

void to_json(nlohmann::json& j, const CounterSample& s);
void to_json(nlohmann::json& j, const SyntheticScript& s);
void from_json(const nlohmann::json& j, SyntheticScript& s);

}  // namespace ergmeter::counters
