#include "ergmeter/error.hpp"

namespace ergmeter {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::io_unreadable: return "IoUnreadable";
    case Errc::torn_read: return "TornRead";
    case Errc::startup_changed: return "StartupChanged";
    case Errc::negative_delta: return "NegativeDelta";
    case Errc::command_spawn_failed: return "CommandSpawnFailed";
    case Errc::invalid_run: return "InvalidRun";
    case Errc::invalid_duration: return "InvalidDuration";
    case Errc::mixed_commands: return "MixedCommands";
    case Errc::no_valid_records: return "NoValidRecords";
    case Errc::invalid_n: return "InvalidN";
    case Errc::empty_study: return "EmptyStudy";
    case Errc::underdetermined: return "Underdetermined";
    case Errc::insufficient_full_node_runs: return "InsufficientFullNodeRuns";
    case Errc::missing_power_ref: return "MissingPowerRef";
    case Errc::shares_exceed_unity: return "SharesExceedUnity";
    case Errc::negative_remainder: return "NegativeRemainder";
    case Errc::unknown_op: return "UnknownOp";
    case Errc::no_digital_equivalent: return "NoDigitalEquivalent";
    case Errc::grid_does_not_fit: return "GridDoesNotFit";
    case Errc::io_write: return "IoWrite";
    case Errc::non_positive_on_log_axis: return "NonPositiveOnLogAxis";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace ergmeter
