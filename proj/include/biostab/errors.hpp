#ifndef BIOSTAB_ERRORS_HPP
#define BIOSTAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace biostab {

// Error families map onto CLI exit codes: ConfigError -> 2,
// SolverError -> 3, IoError -> 4.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace biostab

#endif
