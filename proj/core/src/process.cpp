#include "process.hpp"

#include <cerrno>
#include <cstring>
#include <spawn.h>
#include <sys/wait.h>

#include "ergmeter/error.hpp"

extern char** environ;

namespace ergmeter::detail {

pid_t spawn_process(const std::vector<std::string>& argv) {
  if (argv.empty()) {
    throw Error(Errc::invalid_argument, "empty command");
  }
  std::vector<char*> args;
  args.reserve(argv.size() + 1);
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, args[0], nullptr, nullptr, args.data(), environ);
  if (rc != 0) {
    throw Error(Errc::command_spawn_failed, "cannot run '" + argv[0] + "': " + std::strerror(rc));
  }
  return pid;
}

int wait_process(pid_t pid) {
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, 0);
    if (r == pid) break;
    if (r < 0 && errno == EINTR) continue;
    throw Error(Errc::command_spawn_failed, std::string("waitpid failed: ") + std::strerror(errno));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace ergmeter::detail
