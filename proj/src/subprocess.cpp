#include "brainprompt/subprocess.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "brainprompt/error.hpp"

extern char** environ;

namespace brainprompt {
namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int decode_status(int raw) {
  if (WIFEXITED(raw)) return WEXITSTATUS(raw);
  if (WIFSIGNALED(raw)) return 128 + WTERMSIG(raw);
  return -1;
}

struct Pipe {
  int read = -1;
  int write = -1;
  Pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorCode::Io, std::string("pipe: ") + std::strerror(errno));
    read = fds[0];
    write = fds[1];
  }
};

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

// Spawns argv with the given fds (or -1 to inherit) as stdin/stdout/stderr.
pid_t spawn(const std::vector<std::string>& argv, int in_fd, int out_fd, int err_fd, ErrorCode not_found) {
  if (argv.empty()) throw Error(ErrorCode::InvalidConfig, "empty command line");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  if (in_fd >= 0) posix_spawn_file_actions_adddup2(&actions, in_fd, STDIN_FILENO);
  if (out_fd >= 0) posix_spawn_file_actions_adddup2(&actions, out_fd, STDOUT_FILENO);
  if (err_fd >= 0) posix_spawn_file_actions_adddup2(&actions, err_fd, STDERR_FILENO);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw ProcessError(not_found, "cannot start '" + argv[0] + "': " + std::strerror(rc), std::nullopt, "");
  }
  return pid;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv) {
  ignore_sigpipe();
  Pipe out, err;
  pid_t pid;
  try {
    pid = spawn(argv, -1, out.write, err.write, ErrorCode::ExecutableNotFound);
  } catch (...) {
    for (int* fd : {&out.read, &out.write, &err.read, &err.write}) close_fd(*fd);
    throw;
  }
  close_fd(out.write);
  close_fd(err.write);

  ProcessResult result;
  pollfd fds[2] = {{out.read, POLLIN, 0}, {err.read, POLLIN, 0}};
  std::string* sinks[2] = {&result.out, &result.err};
  int open_count = 2;
  char buf[4096];
  while (open_count > 0) {
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_count;
      }
    }
  }
  int raw = 0;
  while (::waitpid(pid, &raw, 0) < 0 && errno == EINTR) {
  }
  result.exit_status = decode_status(raw);
  return result;
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
  ignore_sigpipe();
  Pipe in, out;
  try {
    pid_ = spawn(argv, in.read, out.write, -1, ErrorCode::BackendUnavailable);
  } catch (...) {
    for (int* fd : {&in.read, &in.write, &out.read, &out.write}) close_fd(*fd);
    throw;
  }
  close_fd(in.read);
  close_fd(out.write);
  stdin_fd_ = in.write;
  stdout_fd_ = out.read;
}

ChildProcess::~ChildProcess() {
  close_fd(stdin_fd_);
  close_fd(stdout_fd_);
  if (pid_ < 0 || status_) return;
  using namespace std::chrono_literals;
  const auto deadline = std::chrono::steady_clock::now() + 2s;
  while (!poll_exit() && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(5ms);
  if (!status_) {
    ::kill(pid_, SIGKILL);
    wait();
  }
}

void ChildProcess::write_all(std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(stdin_fd_, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::optional<int> status = errno == EPIPE ? std::optional<int>(wait()) : poll_exit();
      throw ProcessError(ErrorCode::BackendUnavailable, "backend closed its input", status, "");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::optional<std::string> ChildProcess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[65536];
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (stdout_fd_ < 0) return std::nullopt;

    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      throw Error(ErrorCode::Timeout, "no response within " + std::to_string(timeout.count()) + " ms");
    }
    pollfd pfd{stdout_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;  // deadline check above raises
    const ssize_t n = ::read(stdout_fd_, buf, sizeof buf);
    if (n > 0) {
      buffer_.append(buf, static_cast<std::size_t>(n));
    } else if (n == 0 || errno != EINTR) {
      close_fd(stdout_fd_);
    }
  }
}

int ChildProcess::wait() {
  if (status_) return *status_;
  int raw = 0;
  while (::waitpid(pid_, &raw, 0) < 0) {
    if (errno != EINTR) {
      status_ = -1;
      return *status_;
    }
  }
  status_ = decode_status(raw);
  return *status_;
}

std::optional<int> ChildProcess::poll_exit() {
  if (status_) return status_;
  int raw = 0;
  if (::waitpid(pid_, &raw, WNOHANG) == pid_) status_ = decode_status(raw);
  return status_;
}

}  // namespace brainprompt
