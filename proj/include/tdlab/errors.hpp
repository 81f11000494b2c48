#pragma once

#include <stdexcept>
#include <string>

namespace tdlab {

/// Bad user input: malformed config files, out-of-range parameters,
/// inconsistent shapes. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A problem instance violates one of the standing assumptions
/// (ergodicity, coverage, feature rank, solvable fixed point).
/// CLI exit code 3.
class AssumptionError : public std::runtime_error {
 public:
  explicit AssumptionError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failures, annotated with the offending path. CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tdlab
