#ifndef TDD_ERRORS_HPP
#define TDD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tdd {

// Error taxonomy mirrors the CLI exit codes: ConfigError -> 2,
// DataError -> 3, InternalError -> 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tdd

#endif  // TDD_ERRORS_HPP
