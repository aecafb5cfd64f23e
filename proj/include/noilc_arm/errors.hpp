#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noilc_arm {

// Base of every error the library throws. Callers that only care about
// "something in the library failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModelError : public Error {
 public:
  using Error::Error;
};

class EmptyTrajectoryError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  LengthMismatchError(const std::string& what_arg, std::size_t expected,
                      std::size_t actual)
      : Error(what_arg + ": expected length " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class SingularCostError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class InfeasibleTrajectoryError : public Error {
 public:
  InfeasibleTrajectoryError(const std::string& what_arg, std::size_t segment)
      : Error(what_arg), segment_(segment) {}

  std::size_t segment() const { return segment_; }

 private:
  std::size_t segment_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what_arg, std::size_t step)
      : Error(what_arg), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Config schema violation. line == 0 when the problem is not tied to a line
// (e.g. a missing key or a cross-field constraint).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, std::size_t line, const std::string& msg)
      : Error(format(field, line, msg)), field_(field), line_(line), message_(msg) {}

  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  static std::string format(const std::string& field, std::size_t line,
                            const std::string& msg) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + msg;
  }

  std::string field_;
  std::size_t line_;
  std::string message_;
};

}  // namespace noilc_arm
