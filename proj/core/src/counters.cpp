#include "ergmeter/counters.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ergmeter/error.hpp"
#include "monotonic.hpp"

namespace ergmeter::counters {

namespace fs = std::filesystem;

namespace {

std::string read_whole_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_unreadable, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(Errc::io_unreadable, "read failed for " + path.string());
  }
  return buf.str();
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace

std::int64_t parse_counter_text(std::string_view text, const std::string& what) {
  std::size_t pos = 0;
  while (pos < text.size() && is_space(text[pos])) ++pos;
  std::int64_t value = 0;
  const char* first = text.data() + pos;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first) {
    throw Error(Errc::io_unreadable, "corrupt counter value in " + what);
  }
  if (value < 0) {
    throw Error(Errc::io_unreadable, "negative counter value in " + what);
  }
  pos = static_cast<std::size_t>(ptr - text.data());
  while (pos < text.size() && is_space(text[pos])) ++pos;
  // Cray PM files append a unit ("123456 J"); accept a single unit word.
  while (pos < text.size() && is_alpha(text[pos])) ++pos;
  while (pos < text.size() && is_space(text[pos])) ++pos;
  if (pos != text.size()) {
    throw Error(Errc::io_unreadable, "trailing garbage in " + what);
  }
  return value;
}

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::pm_dir: return "pm-dir";
    case BackendKind::powercap: return "powercap";
    case BackendKind::synthetic: return "synthetic";
  }
  return "unknown";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "pm-dir") return BackendKind::pm_dir;
  if (name == "powercap") return BackendKind::powercap;
  if (name == "synthetic") return BackendKind::synthetic;
  throw Error(Errc::invalid_argument, "unknown backend kind '" + std::string(name) + "'");
}

// --- pm-dir ---------------------------------------------------------------

PmDirBackend::PmDirBackend(fs::path dir, double update_hz, FileReader reader)
    : dir_(std::move(dir)),
      update_hz_(update_hz),
      reader_(reader ? std::move(reader) : FileReader(read_whole_file)),
      id_("pm-dir:" + dir_.string()) {
  if (!(update_hz_ > 0.0)) {
    throw Error(Errc::invalid_argument, "update_hz must be positive");
  }
}

CounterSample PmDirBackend::read_sample() {
  std::lock_guard lock(mutex_);
  const fs::path energy_path = dir_ / "energy";
  const fs::path startup_path = dir_ / "startup";

  for (int attempt = 0; attempt <= kTornReadRetries; ++attempt) {
    const auto token_before = parse_counter_text(reader_(startup_path), startup_path.string());
    const auto energy = parse_counter_text(reader_(energy_path), energy_path.string());
    const auto token_after = parse_counter_text(reader_(startup_path), startup_path.string());
    if (token_before == token_after) {
      const double at = detail::strictly_after(last_read_at_, detail::monotonic_seconds());
      last_read_at_ = at;
      return CounterSample{static_cast<double>(energy), token_after, at};
    }
  }
  throw Error(Errc::torn_read, "startup counter kept changing while reading " + dir_.string());
}

// --- powercap -------------------------------------------------------------

PowercapBackend::PowercapBackend(fs::path dir, std::optional<std::int64_t> wrap_range_uj,
                                 double update_hz)
    : dir_(std::move(dir)),
      wrap_range_uj_(wrap_range_uj),
      update_hz_(update_hz),
      id_("powercap:" + dir_.string()) {
  if (!(update_hz_ > 0.0)) {
    throw Error(Errc::invalid_argument, "update_hz must be positive");
  }
  if (wrap_range_uj_ && *wrap_range_uj_ <= 0) {
    throw Error(Errc::invalid_argument, "wrap_range_uj must be positive");
  }
  const fs::path range_path = dir_ / "max_energy_range_uj";
  if (!wrap_range_uj_ && fs::exists(range_path)) {
    // The file holds the largest representable value; the ring has one more slot.
    wrap_range_uj_ = parse_counter_text(read_whole_file(range_path), range_path.string()) + 1;
  }
}

CounterSample PowercapBackend::read_sample() {
  std::lock_guard lock(mutex_);
  const fs::path energy_path = dir_ / "energy_uj";
  const auto uj = parse_counter_text(read_whole_file(energy_path), energy_path.string());
  const double at = detail::strictly_after(last_read_at_, detail::monotonic_seconds());
  last_read_at_ = at;
  return CounterSample{static_cast<double>(uj) * 1e-6, 0, at};
}

// --- factory / delta ------------------------------------------------------

std::unique_ptr<CounterBackend> open_backend(const BackendDescriptor& desc) {
  switch (desc.kind) {
    case BackendKind::pm_dir: {
      for (const char* name : {"energy", "startup"}) {
        if (!fs::exists(desc.path / name)) {
          throw Error(Errc::io_unreadable,
                      "pm-dir " + desc.path.string() + " has no '" + name + "' file");
        }
      }
      return std::make_unique<PmDirBackend>(desc.path, desc.update_hz);
    }
    case BackendKind::powercap: {
      if (!fs::exists(desc.path / "energy_uj")) {
        throw Error(Errc::io_unreadable,
                    "powercap " + desc.path.string() + " has no 'energy_uj' file");
      }
      return std::make_unique<PowercapBackend>(desc.path, desc.wrap_range_uj, desc.update_hz);
    }
    case BackendKind::synthetic: {
      if (!desc.script) {
        throw Error(Errc::invalid_argument, "synthetic backend requires a script");
      }
      return std::make_unique<SyntheticBackend>(*desc.script,
                                                SyntheticBackend::ClockMode::real_time);
    }
  }
  throw Error(Errc::invalid_argument, "unknown backend kind");
}

double energy_delta(const CounterSample& before, const CounterSample& after,
                    std::optional<std::int64_t> wrap_range_uj) {
  if (after.read_at < before.read_at) {
    throw Error(Errc::invalid_argument, "samples out of order");
  }
  if (before.startup_token != after.startup_token) {
    throw Error(Errc::startup_changed,
                "startup token changed from " + std::to_string(before.startup_token) + " to " +
                    std::to_string(after.startup_token) + "; the run must be repeated");
  }
  const double delta = after.energy_joules - before.energy_joules;
  if (delta >= 0.0) return delta;
  if (!wrap_range_uj) {
    throw Error(Errc::negative_delta, "counter decreased without a wrap range");
  }
  const std::int64_t range = *wrap_range_uj;
  if (range <= 0) {
    throw Error(Errc::invalid_argument, "wrap_range_uj must be positive");
  }
  const std::int64_t a = std::llround(after.energy_joules * 1e6);
  const std::int64_t b = std::llround(before.energy_joules * 1e6);
  std::int64_t d = (a - b) % range;
  if (d < 0) d += range;
  return static_cast<double>(d) * 1e-6;
}

}  // namespace ergmeter::counters
