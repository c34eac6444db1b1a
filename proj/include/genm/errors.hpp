#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genm {

/// Dimension mismatches, empty inputs, violated preconditions.
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A document or query identifier that is not present where it was looked up.
class not_found : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed input line. `line()` is 1-based.
class parse_error : public std::runtime_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class duplicate_error : public std::runtime_error {
 public:
  duplicate_error(std::size_t first_line, std::size_t second_line, const std::string& what)
      : std::runtime_error(what + " (lines " + std::to_string(first_line) + " and " +
                           std::to_string(second_line) + ")"),
        first_line_(first_line),
        second_line_(second_line) {}

  std::size_t first_line() const noexcept { return first_line_; }
  std::size_t second_line() const noexcept { return second_line_; }

 private:
  std::size_t first_line_;
  std::size_t second_line_;
};

class empty_dataset_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class preprocessing_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every start of a multi-start optimisation aborted.
class optimization_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No fake-relevant documents for any ranker at the chosen score threshold.
class threshold_too_high : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genm
