#include "pseudocam/jsonl.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pseudocam/error.hpp"

namespace pseudocam::jsonl {

std::vector<Record> parse_text(const std::string& text, const std::string& source) {
  std::vector<Record> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back({number, Json::parse(line)});
    } catch (const Json::parse_error& e) {
      throw FormatError(source, number, std::string("malformed JSON: ") + e.what());
    }
  }
  return out;
}

std::vector<Record> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path.string());
}

FieldReader::FieldReader(const Record& record, std::string source)
    : record_(record), source_(std::move(source)) {
  if (!record_.value.is_object()) fail("expected a JSON object");
}

void FieldReader::fail(const std::string& message) const {
  throw FormatError(source_, record_.line, message);
}

bool FieldReader::has(const char* key) const { return record_.value.contains(key); }

const Json& FieldReader::field(const char* key) const {
  auto it = record_.value.find(key);
  if (it == record_.value.end()) fail(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string FieldReader::string(const char* key) const {
  const auto& v = field(key);
  if (!v.is_string()) fail(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

long long FieldReader::integer(const char* key) const {
  const auto& v = field(key);
  if (!v.is_number_integer()) fail(std::string("field \"") + key + "\" must be an integer");
  return v.get<long long>();
}

double FieldReader::real(const char* key) const {
  const auto& v = field(key);
  if (!v.is_number()) fail(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

const Json& FieldReader::array(const char* key) const {
  const auto& v = field(key);
  if (!v.is_array()) fail(std::string("field \"") + key + "\" must be an array");
  return v;
}

std::vector<double> FieldReader::reals(const char* key) const {
  const auto& arr = array(key);
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) fail(std::string("field \"") + key + "\" must hold numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(std::string("field \"") + key + "\" holds a non-finite value");
    out.push_back(x);
  }
  return out;
}

std::vector<long long> FieldReader::integers(const char* key) const {
  const auto& arr = array(key);
  std::vector<long long> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer()) fail(std::string("field \"") + key + "\" must hold integers");
    out.push_back(v.get<long long>());
  }
  return out;
}

std::string to_text(const std::vector<Json>& lines) {
  std::string out;
  for (const auto& j : lines) {
    out += j.dump(-1, ' ', false, Json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::vector<Json>& lines) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write " + path.string());
  out << to_text(lines);
  if (!out) throw Error(ErrorKind::MissingArtifact, "write failed for " + path.string());
}

}  // namespace pseudocam::jsonl
