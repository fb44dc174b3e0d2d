#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ssg {

// Raised on shape mismatches and violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Structured error for dataset/checkpoint files. `line` is 1-based, 0 when
// the error is semantic rather than syntactic.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, std::size_t line, const std::string& what)
      : std::runtime_error(format(field, line, what)), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& field, std::size_t line, const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + what;
  }

  std::string field_;
  std::size_t line_;
};

// The bordered KKT matrix could not be factored.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double condition_estimate)
      : std::runtime_error(what + " (rcond ~ " + std::to_string(condition_estimate) + ")"),
        rcond_(condition_estimate) {}

  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

}  // namespace ssg
