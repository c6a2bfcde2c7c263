#pragma once

#include <string>
#include <sys/types.h>
#include <vector>

namespace ergmeter::detail {

/// Start `argv` with inherited stdio. Throws CommandSpawnFailed.
pid_t spawn_process(const std::vector<std::string>& argv);

/// Block until `pid` exits; returns its exit code (128 + signal if killed).
int wait_process(pid_t pid);

}  // namespace ergmeter::detail
