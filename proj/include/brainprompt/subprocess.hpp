#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>

namespace brainprompt {

struct ProcessResult {
  int exit_status = 0;  // 128 + signal number when killed by a signal
  std::string out;
  std::string err;
};

/// Runs argv[0] (looked up on PATH when it has no slash) to completion,
/// capturing stdout and stderr. Throws ExecutableNotFound when it cannot be
/// started.
ProcessResult run_process(const std::vector<std::string>& argv);

/// A child process with pipes on its stdin and stdout; stderr is inherited.
/// One owner, not copyable. The destructor closes stdin and reaps the child,
/// killing it if it does not exit promptly.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Throws BackendUnavailable if the child has gone away.
  void write_all(std::string_view data);

  /// Next newline-terminated line without the newline; nullopt at EOF.
  /// Throws Timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  /// Blocks until exit; returns the exit status (128 + signal if killed).
  int wait();

  /// Exit status if the child already exited, without blocking.
  std::optional<int> poll_exit();

  pid_t pid() const noexcept { return pid_; }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::optional<int> status_;
  std::string buffer_;
};

}  // namespace brainprompt
