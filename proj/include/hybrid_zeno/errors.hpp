#pragma once

#include <stdexcept>
#include <string>

namespace hybrid_zeno {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive step control collapsed below representable increments.
class StepSizeUnderflow : public Error {
 public:
  explicit StepSizeUnderflow(double t)
      : Error("step size underflow at t = " + std::to_string(t)), time(t) {}
  double time;
};

/// The integrated state left the finite reals.
class NonFiniteState : public Error {
 public:
  explicit NonFiniteState(double t)
      : Error("non-finite state at t = " + std::to_string(t)), time(t) {}
  double time;
};

class InvalidInitialState : public Error {
 public:
  using Error::Error;
};

/// A reset was requested away from the guard.
class GuardViolation : public Error {
 public:
  using Error::Error;
};

/// The co-state jump is undefined because the impact momentum is (numerically) zero.
class ZenoSingularity : public Error {
 public:
  explicit ZenoSingularity(double momentum)
      : Error("extended reset undefined at impact momentum " + std::to_string(momentum)),
        momentum(momentum) {}
  double momentum;
};

class NonpositiveDuration : public Error {
 public:
  using Error::Error;
};

/// Closed-form Zeno steering only covers the terminal (x_f, p_f) = (1, 0).
class UnsupportedTerminal : public Error {
 public:
  using Error::Error;
};

class NotLocallyOptimal : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class NoRoot : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; carries the offending line (0 when not line-bound) and key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line),
        key(std::move(key)) {}
  int line;
  std::string key;
};

}  // namespace hybrid_zeno
