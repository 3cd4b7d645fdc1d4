#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tecorridor {

/// Raised when a caller passes data outside an operation's domain
/// (empty vectors, non-finite values, malformed distributions).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is invoked in a state its contract forbids,
/// e.g. stepping a terminal episode.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed snapshot, config, or log input. Carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tecorridor
