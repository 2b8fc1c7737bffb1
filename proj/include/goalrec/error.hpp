#pragma once

#include <stdexcept>
#include <string>

namespace goalrec {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Goal unreachable from the start on a grid.
class NoPath : public Error {
 public:
  using Error::Error;
};

// No path/plan embeds the observation sequence.
class NoCompliantPlan : public Error {
 public:
  using Error::Error;
};

// STRIPS goal unreachable.
class Unsolvable : public Error {
 public:
  using Error::Error;
};

// Planner exceeded its wall-clock or expansion budget.
class SearchTimeout : public Error {
 public:
  using Error::Error;
};

class MissingPrerequisite : public Error {
 public:
  using Error::Error;
};

}  // namespace goalrec
