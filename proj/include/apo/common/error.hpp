#pragma once

#include <stdexcept>
#include <string>

namespace apo {

// Base for every error raised by the library. `kind()` is a stable tag used
// in machine-readable error records.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Caller broke a documented precondition (shape mismatch, bad index).
class ContractViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract_violation"; }
};

// Input data rejected at runtime (non-finite observation, malformed file).
class RejectedInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "rejected_input"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

// A gradient tape was used after the network it came from changed.
class StaleTape : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "stale_tape"; }
};

// A loss, ratio or gradient became NaN/Inf. Training aborts on this.
class NonFiniteError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "non_finite"; }
};

// Environment misuse, e.g. stepping a finished episode.
class EnvError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "env_error"; }
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace apo
