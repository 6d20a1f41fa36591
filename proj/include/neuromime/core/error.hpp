#pragma once

#include <stdexcept>
#include <string>

namespace neuromime {

// Base for every error raised by the library. The CLI maps `ConfigError`
// to exit code 2 and every other `Error` to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition that is not a plain range check
// (wrong pulse shape, wrong device family, mismatched dimensions).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Explicit integrator refused the requested step size.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double max_dt)
      : Error(what), max_dt_(max_dt) {}
  double max_dt() const noexcept { return max_dt_; }

 private:
  double max_dt_;
};

// State left the admissible region during integration.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Signal does not contain the structure an analysis needs (missing peaks,
// too few neighbours, constant series).
class DegenerateSignal : public Error {
 public:
  using Error::Error;
};

// Singular nodal system or disconnected graph.
class TopologyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace neuromime
