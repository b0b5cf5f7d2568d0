#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pseudocam {

enum class ErrorKind {
  InvalidInput,
  FormatError,
  DegenerateVector,
  TooFewShots,
  CannotSplit,
  MissingArtifact,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the ErrorKind tags so
/// the CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure in one of the JSON Lines formats. `line` is 1-based, 0 when
/// the failure is not tied to a single line.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] void throw_invalid(const std::string& message);

}  // namespace pseudocam
