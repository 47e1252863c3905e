#include "rcg/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace rcg {
namespace {

[[noreturn]] void child_exec(const std::vector<std::string>& argv,
                             const std::optional<std::filesystem::path>& cwd,
                             int out_fd, int err_fd) {
  // New process group so a timeout kill reaps grandchildren too.
  ::setpgid(0, 0);
  if (cwd && ::chdir(cwd->c_str()) != 0) ::_exit(127);
  ::dup2(out_fd, STDOUT_FILENO);
  ::dup2(err_fd, STDERR_FILENO);
  ::close(out_fd);
  ::close(err_fd);
  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);
  ::execvp(cargv[0], cargv.data());
  ::_exit(127);
}

void drain(int fd, std::string& sink) {
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      sink.append(buf, static_cast<size_t>(n));
    } else if (n == 0 || (n < 0 && errno != EINTR)) {
      return;
    }
  }
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv,
                          double timeout_seconds,
                          const std::optional<std::filesystem::path>& cwd) {
  if (argv.empty()) throw std::invalid_argument("run_process: empty argv");

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
    throw std::system_error(errno, std::generic_category(), "pipe");

  pid_t pid = ::fork();
  if (pid < 0) throw std::system_error(errno, std::generic_category(), "fork");
  if (pid == 0) {
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    child_exec(argv, cwd, out_pipe[1], err_pipe[1]);
  }

  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_seconds));

  struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  bool open_fd[2] = {true, true};
  std::string* sinks[2] = {&result.out, &result.err};

  while (open_fd[0] || open_fd[1]) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
      break;
    }
    int timeout_ms = static_cast<int>(std::min<long long>(remaining.count(), 500));
    int nready = ::poll(fds, 2, timeout_ms);
    if (nready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (!open_fd[i]) continue;
      if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[4096];
        ssize_t n;
        while ((n = ::read(fds[i].fd, buf, sizeof buf)) > 0)
          sinks[i]->append(buf, static_cast<size_t>(n));
        if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
          open_fd[i] = false;
          fds[i].fd = -1;
        }
      }
    }
  }

  if (result.timed_out) {
    // Collect whatever was buffered before the kill.
    ::fcntl(out_pipe[0], F_SETFL, 0);
    ::fcntl(err_pipe[0], F_SETFL, 0);
    drain(out_pipe[0], result.out);
    drain(err_pipe[0], result.err);
  }
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (result.timed_out) {
    result.exit_code = -1;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

bool executable_on_path(const std::string& name) {
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::stringstream ss{std::string(path)};
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    std::filesystem::path cand = std::filesystem::path(dir) / name;
    std::error_code ec;
    if (std::filesystem::is_regular_file(cand, ec) &&
        ::access(cand.c_str(), X_OK) == 0)
      return true;
  }
  return false;
}

TempDir::TempDir(const std::string& prefix) {
  auto base = std::filesystem::temp_directory_path();
  std::random_device rd;
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto cand = base / (prefix + "-" + std::to_string(rd()));
    std::error_code ec;
    if (std::filesystem::create_directory(cand, ec)) {
      path_ = cand;
      return;
    }
  }
  throw std::runtime_error("TempDir: could not create unique directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace rcg
