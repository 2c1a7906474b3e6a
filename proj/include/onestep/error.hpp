#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace onestep {

// Malformed or inconsistent model definition (bad parameter, unresolved name...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}

  ConfigError(const std::string& what, std::vector<std::string> violations)
      : std::runtime_error(what), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Syntax error in a model file. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column, const std::string& source = "")
      : std::runtime_error(format(what, line, column, source)),
        message_(what),
        line_(line),
        column_(column) {}

  const std::string& message() const noexcept { return message_; }

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column,
                            const std::string& source) {
    return (source.empty() ? "" : source + ":") + std::to_string(line) + ":" +
           std::to_string(column) + ": " + what;
  }

  std::string message_;
  int line_;
  int column_;
};

// Iterative numerics that failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace onestep
