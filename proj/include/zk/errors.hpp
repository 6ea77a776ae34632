#pragma once

#include <stdexcept>
#include <string>

namespace zk {

// Solver or linear algebra breakdown: NaN, singular solve, no convergence.
class NumericalFailure : public std::runtime_error {
public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-facing parameters (grids, boxes, config values).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the domain where an operation is defined.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Process exit codes used by the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitNumerical = 2,
  kExitConfig = 3,
  kExitUsage = 64,
};

int exit_code_for(const std::exception& e);

}  // namespace zk
