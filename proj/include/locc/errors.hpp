#pragma once

#include <stdexcept>
#include <string>

namespace locc {

// Bad user input: malformed config files, unknown keys, out-of-range values.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Shape or precondition violation on operator arguments.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure: positivity loss, non-PSD input, failed decompositions.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace locc
