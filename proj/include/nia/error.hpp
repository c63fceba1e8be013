#pragma once

#include <stdexcept>
#include <string>

namespace nia {

// Base of every error raised by the library. Each subclass maps to one
// failure class so callers (and the CLI exit-code policy) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidOperator : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class TimeOutOfRange : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedSchedule : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class BlockLeakage : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// Non-finite value met during time stepping; carries the step index.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace nia
