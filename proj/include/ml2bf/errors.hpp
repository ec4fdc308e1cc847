#pragma once

#include <stdexcept>
#include <string>

namespace ml2bf {

/// Malformed input data, inconsistent dimensions, or a violated precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank deficiency, saturated fits, quadrature failure and similar numerical trouble.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad experiment configuration (CLI flags or config file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ml2bf
