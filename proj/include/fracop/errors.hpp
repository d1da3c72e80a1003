#pragma once

#include <stdexcept>
#include <string>

namespace fracop {

// Invalid or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// NaN/Inf in an iterate, or a reference integrator that failed to converge
// (maps to CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracop
