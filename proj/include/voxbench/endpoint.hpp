#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "voxbench/errors.hpp"

namespace voxbench {

/// Transport-level failure (connection refused, process died, timeout,
/// non-200 status). Retried; protocol-level garbage is not.
class EndpointError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kTokenEnvVar = "VOXBENCH_ENDPOINT_TOKEN";

/// Sends one JSON request and returns the raw reply body.
class Transport {
 public:
  virtual ~Transport() = default;
  /// `route` is "/answer" or "/design"; line-based transports ignore it.
  virtual std::string exchange(std::string_view route, const std::string& request) = 0;
  virtual std::string describe() const = 0;
};

/// POSTs to http://host:port<base><route>; sends "Authorization: Bearer
/// <token>" when the token environment variable is set.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string host, int port, std::string base_path = "",
                std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string exchange(std::string_view route, const std::string& request) override;
  std::string describe() const override;

 private:
  std::string host_;
  int port_;
  std::string base_;
  std::chrono::seconds timeout_;
  std::string token_;
};

/// Spawns `/bin/sh -c command` once and speaks one JSON object per line
/// over its stdin/stdout. Requests are serialised; a dead child is
/// restarted on the next exchange. The child inherits the environment,
/// so the token variable passes through.
class StdioTransport : public Transport {
 public:
  explicit StdioTransport(std::string command,
                          std::chrono::milliseconds timeout = std::chrono::seconds(120));
  ~StdioTransport() override;
  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  std::string exchange(std::string_view route, const std::string& request) override;
  std::string describe() const override { return "stdio:" + command_; }

 private:
  void start();
  void stop();

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;  // bytes read past the last newline
};

/// "http://host:port[/base]" or "stdio:<shell command>". Throws ConfigError.
std::unique_ptr<Transport> make_transport(std::string_view spec);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_delay{200};
  double multiplier = 2.0;
};

}  // namespace voxbench
