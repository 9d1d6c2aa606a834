#ifndef LENBIAS_ERROR_HPP
#define LENBIAS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lenbias {

// Common base so callers can catch everything this library throws on
// purpose; anything else escaping is a bug.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O failures: missing files, unwritable outputs.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed input content (bad column count, bad label, bad JSON).
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Structurally valid input that violates cross-record constraints
// (duplicate ids, dangling references, manifest/dataset mismatches).
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration or parameters (infeasible generator spec,
// unknown feature name, k out of range).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Optimization produced a non-finite loss.
struct TrainingError : Error {
  explicit TrainingError(const std::string& msg) : Error(msg) {}
};

}  // namespace lenbias

#endif  // LENBIAS_ERROR_HPP
