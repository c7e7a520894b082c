#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpcl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument detected before any compute.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A non-finite entry was found at (row, col).
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& where, long row, long col)
      : Error(where + ": non-finite entry at row " + std::to_string(row) + ", column " +
              std::to_string(col)),
        row_(row),
        col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  long row_;
  long col_;
};

}  // namespace mpcl
