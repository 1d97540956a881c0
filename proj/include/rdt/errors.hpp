#pragma once

#include <stdexcept>
#include <string>

namespace rdt {

// No tested row produced a bitflip anywhere on the coarse hammer grid:
// the device is too strong for the configured scan range.
class NoFlipInGridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An ensemble finished with zero observed failures, so no failure-rate
// estimate can be formed. Callers should extend the horizon.
class InsufficientFailuresError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A run configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdt
