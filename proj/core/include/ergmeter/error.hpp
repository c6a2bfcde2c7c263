#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergmeter {

enum class Errc {
  // counters
  io_unreadable,
  torn_read,
  startup_changed,
  negative_delta,
  // harness
  command_spawn_failed,
  invalid_run,
  invalid_duration,
  mixed_commands,
  no_valid_records,
  // scaling
  invalid_n,
  empty_study,
  underdetermined,
  insufficient_full_node_runs,
  // attribution
  missing_power_ref,
  shares_exceed_unity,
  negative_remainder,
  // optics
  unknown_op,
  no_digital_equivalent,
  grid_does_not_fit,
  // report
  io_write,
  non_positive_on_log_axis,
  // shared
  invalid_argument,
  parse_error,
};

std::string_view errc_name(Errc code) noexcept;

/// Base exception for every failure reported by the toolkit.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ergmeter
