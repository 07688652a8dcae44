#pragma once

#include <stdexcept>
#include <string>

namespace gazessl {

/// Precondition violated by the caller (bad shape, out-of-range value, empty input).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A persisted file is malformed: wrong magic, truncated, bad JSON.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// File was written by a newer format version than this build understands.
class UnsupportedVersion : public FormatError {
 public:
  explicit UnsupportedVersion(const std::string& what) : FormatError(what) {}
};

/// Experiment configuration problem; `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

[[noreturn]] void throw_invalid(const std::string& where, const std::string& what);

inline void require(bool cond, const char* where, const std::string& what) {
  if (!cond) throw_invalid(where, what);
}

}  // namespace gazessl
