#pragma once

#include <stdexcept>
#include <string>

namespace zakai {

/// Invalid user-supplied parameters or configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The model violates the mean-square stability conditions; estimators refuse to run.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure broke down (singular pivot, infeasible target, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zakai
