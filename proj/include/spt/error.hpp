#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` and `column` are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string out;
    if (line > 0) {
      out += "line " + std::to_string(line);
      if (column > 0) out += ", column " + std::to_string(column);
      out += ": ";
    }
    return out + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// A structurally valid object violates a semantic constraint
/// (probability sums, arities, unknown activities, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A configured size or work bound was exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace spt
