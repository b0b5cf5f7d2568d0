#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pseudocam::jsonl {

using Json = nlohmann::json;

struct Record {
  std::size_t line = 0;  // 1-based
  Json value;
};

/// Reads every non-blank line as one JSON value. Throws MissingArtifact when
/// the file cannot be opened and FormatError (with line number) on bad JSON.
std::vector<Record> read_file(const std::filesystem::path& path);

std::vector<Record> parse_text(const std::string& text, const std::string& source);

/// Required field accessors; all throw FormatError naming the source and line.
class FieldReader {
 public:
  FieldReader(const Record& record, std::string source);

  std::string string(const char* key) const;
  long long integer(const char* key) const;
  double real(const char* key) const;
  std::vector<double> reals(const char* key) const;
  std::vector<long long> integers(const char* key) const;
  const Json& array(const char* key) const;
  bool has(const char* key) const;

  [[noreturn]] void fail(const std::string& message) const;

 private:
  const Json& field(const char* key) const;

  const Record& record_;
  std::string source_;
};

/// Writes one compact JSON value per line.
void write_file(const std::filesystem::path& path, const std::vector<Json>& lines);

std::string to_text(const std::vector<Json>& lines);

}  // namespace pseudocam::jsonl
