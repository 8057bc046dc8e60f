#pragma once

#include <stdexcept>
#include <string>

namespace diracwell {

/// Invalid parameters or configuration; the message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that produced non-finite or contract-violating results.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diracwell
