#include "oaf/external_provider.hpp"

#include "oaf/errors.hpp"
#include "oaf/io.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace oaf {

ExternalProvider::ExternalProvider(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw Error("external provider: empty command");
  std::signal(SIGPIPE, SIG_IGN);
}

ExternalProvider::~ExternalProvider() { stop(); }

void ExternalProvider::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw ProviderError("external provider: pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ProviderError("external provider: pipe failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw ProviderError("external provider: fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  pending_.clear();
}

void ExternalProvider::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(-pid_, SIGKILL);  // the whole group, so commands the shell spawned go too
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
  pending_.clear();
}

std::string ExternalProvider::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      stop();
      throw ProviderError("external provider: timed out");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      stop();
      throw ProviderError("external provider: poll failed");
    }
    if (rc == 0) continue;
    char buf[4096];
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n <= 0) {
      stop();
      throw ProviderError("external provider: process exited");
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

PointmapPrediction ExternalProvider::predict(const Image& img_i, const Image& img_j) {
  if (img_i.source.empty() || img_j.source.empty()) {
    throw ProviderError("external provider: images have no file path");
  }
  if (pid_ < 0) start();
  const std::string request = img_i.source.string() + "\t" + img_j.source.string() + "\n";
  std::size_t off = 0;
  while (off < request.size()) {
    const ssize_t n = write(to_child_, request.data() + off, request.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw ProviderError("external provider: write failed");
    }
    off += static_cast<std::size_t>(n);
  }
  const std::string line = read_line();
  if (line.rfind("error", 0) == 0) throw ProviderError("external provider: " + line);
  if (line.empty() || line.find('\t') != std::string::npos) {
    throw ProviderError("external provider: malformed response '" + line + "'");
  }
  if (!fs::is_regular_file(line)) {
    throw ProviderError("external provider: response is not a cache file: '" + line + "'");
  }
  return read_prediction(line);
}

}  // namespace oaf
