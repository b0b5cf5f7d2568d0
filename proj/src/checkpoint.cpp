#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pseudocam/error.hpp"
#include "pseudocam/jsonl.hpp"
#include "pseudocam/model.hpp"

// Checkpoint layout: one line of JSON (the header, terminated by '\n')
// followed by every tensor listed in header["tensors"], in that order,
// row-major, as IEEE-754 binary64 little-endian values.

namespace pseudocam {

namespace {

constexpr const char* kFormat = "pseudocam-checkpoint";
constexpr int kVersion = 1;

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  ModelParams p = params;
  jsonl::Json tensors = jsonl::Json::array();
  std::string payload;
  for (const auto& t : p.tensors()) {
    tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    for (double v : t.values) put_le(payload, v);
  }
  const jsonl::Json header = {{"format", kFormat},
                              {"version", kVersion},
                              {"d_f", p.dims.d_f},
                              {"d_model", p.dims.d_model},
                              {"d_hidden", p.dims.d_hidden},
                              {"k", p.dims.k},
                              {"layers", p.dims.layers},
                              {"tau", p.tau},
                              {"seed", p.seed},
                              {"tensors", tensors}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write checkpoint " + path.string());
  out << header.dump() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorKind::MissingArtifact, "write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  const std::string source = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "no checkpoint at " + source);
  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError(source, 1, "missing checkpoint header");
  jsonl::Json header;
  try {
    header = jsonl::Json::parse(header_line);
  } catch (const jsonl::Json::parse_error& e) {
    throw FormatError(source, 1, std::string("malformed checkpoint header: ") + e.what());
  }
  ModelParams p;
  try {
    if (header.at("format") != kFormat || header.at("version") != kVersion)
      throw FormatError(source, 1, "not a version 1 pseudocam checkpoint");
    ModelDims dims;
    dims.d_f = header.at("d_f").get<std::size_t>();
    dims.d_model = header.at("d_model").get<std::size_t>();
    dims.d_hidden = header.at("d_hidden").get<std::size_t>();
    dims.k = header.at("k").get<int>();
    dims.layers = header.at("layers").get<int>();
    p = ModelParams::initialize(dims, header.at("tau").get<double>(), header.at("seed").get<std::uint64_t>());
  } catch (const jsonl::Json::exception& e) {
    throw FormatError(source, 1, std::string("bad checkpoint header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::FormatError) throw;
    throw FormatError(source, 1, e.what());
  }

  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string payload = rest.str();
  const auto bytes = reinterpret_cast<const unsigned char*>(payload.data());

  auto views = p.tensors();
  const auto& declared = header.at("tensors");
  if (!declared.is_array() || declared.size() != views.size())
    throw FormatError(source, 1, "tensor list does not match the declared dimensions");
  std::size_t offset = 0;
  for (std::size_t t = 0; t < views.size(); ++t) {
    const auto& decl = declared[t];
    if (decl.value("name", "") != views[t].name || decl.value("rows", 0u) != views[t].rows ||
        decl.value("cols", 0u) != views[t].cols)
      throw FormatError(source, 1, "unexpected tensor entry " + std::to_string(t));
    const std::size_t need = views[t].values.size() * 8;
    if (offset + need > payload.size()) throw FormatError(source, 0, "truncated checkpoint payload");
    for (double& v : views[t].values) {
      v = get_le(bytes + offset);
      offset += 8;
    }
  }
  if (offset != payload.size()) throw FormatError(source, 0, "trailing bytes after the last tensor");
  return p;
}

}  // namespace pseudocam
