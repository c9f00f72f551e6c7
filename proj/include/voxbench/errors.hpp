#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace voxbench {

// Base for every error raised by the library. Callers that only need a
// message can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration or usage problems (bad budgets, unknown names, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedTask : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownTask : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BadBudget : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidDesign : public Error {
 public:
  using Error::Error;
};

// Rejection sampling ran out of retries.
class SamplingFailure : public Error {
 public:
  using Error::Error;
};

class MutationFailure : public Error {
 public:
  using Error::Error;
};

class NoveltyExhausted : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class NotEnoughRecords : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptySet : public Error {
 public:
  using Error::Error;
};

class MissingTrial : public Error {
 public:
  using Error::Error;
};

class DatasetMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace voxbench
