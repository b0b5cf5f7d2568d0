#include "pseudocam/error.hpp"

namespace pseudocam {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::DegenerateVector: return "DegenerateVector";
    case ErrorKind::TooFewShots: return "TooFewShots";
    case ErrorKind::CannotSplit: return "CannotSplit";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {
std::string located(const std::string& source, std::size_t line, const std::string& message) {
  std::string out = source;
  if (line > 0) out += ", line " + std::to_string(line);
  return out + ": " + message;
}
}  // namespace

FormatError::FormatError(const std::string& source, std::size_t line, const std::string& message)
    : Error(ErrorKind::FormatError, located(source, line, message)), line_(line) {}

void throw_invalid(const std::string& message) { throw Error(ErrorKind::InvalidInput, message); }

}  // namespace pseudocam
