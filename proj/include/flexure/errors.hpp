#pragma once

#include <stdexcept>
#include <string>

namespace flexure {

/// Bad user-supplied configuration (degree sets, bounds, radii, thresholds).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// K_ff lost positive definiteness. `pivot` is the global displacement index.
class SingularSystemError : public std::runtime_error {
public:
  SingularSystemError(const std::string& what, long pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  long pivot() const noexcept { return pivot_; }

private:
  long pivot_;
};

/// A degree whose prescribed field produces no strain energy at iteration 0.
class DegenerateProblemError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite optimizer input or similar arithmetic failure.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace flexure
