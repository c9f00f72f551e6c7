#include "voxbench/endpoint.hpp"

#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

namespace voxbench {

HttpTransport::HttpTransport(std::string host, int port, std::string base_path,
                             std::chrono::seconds timeout)
    : host_(std::move(host)), port_(port), base_(std::move(base_path)), timeout_(timeout) {
  if (const char* t = std::getenv(kTokenEnvVar)) token_ = t;
}

std::string HttpTransport::exchange(std::string_view route, const std::string& request) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  const std::string path = base_ + std::string(route);
  auto res = client.Post(path, headers, request, "application/json");
  if (!res) {
    throw EndpointError(describe() + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw EndpointError(describe() + path + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::string HttpTransport::describe() const {
  return "http://" + host_ + ":" + std::to_string(port_) + base_;
}

StdioTransport::StdioTransport(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  // A child that exits mid-write must surface as an error, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
}

StdioTransport::~StdioTransport() { stop(); }

void StdioTransport::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw EndpointError("pipe: " + std::string(std::strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw EndpointError("pipe: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) throw EndpointError("fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  pending_.clear();
}

void StdioTransport::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
  pid_ = -1;
}

std::string StdioTransport::exchange(std::string_view, const std::string& request) {
  std::lock_guard lock(mutex_);
  if (pid_ < 0) start();
  const std::string line = request + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw EndpointError(describe() + ": write failed");
    }
    written += static_cast<std::size_t>(n);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    if (auto nl = pending_.find('\n'); nl != std::string::npos) {
      std::string reply = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return reply;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      stop();
      throw EndpointError(describe() + ": timed out waiting for a reply");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char buf[4096];
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw EndpointError(describe() + ": process closed its output");
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::unique_ptr<Transport> make_transport(std::string_view spec) {
  if (spec.starts_with("stdio:")) {
    std::string cmd(spec.substr(6));
    if (cmd.empty()) throw ConfigError("stdio endpoint needs a command");
    return std::make_unique<StdioTransport>(std::move(cmd));
  }
  if (spec.starts_with("http://")) {
    std::string_view rest = spec.substr(7);
    std::string base;
    if (auto slash = rest.find('/'); slash != std::string_view::npos) {
      base = std::string(rest.substr(slash));
      rest = rest.substr(0, slash);
      while (!base.empty() && base.back() == '/') base.pop_back();
    }
    std::string host(rest);
    int port = 80;
    if (auto colon = rest.rfind(':'); colon != std::string_view::npos) {
      host = std::string(rest.substr(0, colon));
      try {
        port = std::stoi(std::string(rest.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ConfigError("bad port in endpoint '" + std::string(spec) + "'");
      }
    }
    if (host.empty()) throw ConfigError("endpoint '" + std::string(spec) + "' has no host");
    return std::make_unique<HttpTransport>(std::move(host), port, std::move(base));
  }
  throw ConfigError("endpoint must start with http:// or stdio: (got '" + std::string(spec) + "')");
}

}  // namespace voxbench
