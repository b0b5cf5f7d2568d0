#include "pseudocam/features.hpp"

#include <algorithm>
#include <cmath>

#include "pseudocam/error.hpp"
#include "pseudocam/jsonl.hpp"

namespace pseudocam {

Vector normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > kMinNorm)) throw Error(ErrorKind::DegenerateVector, "cannot normalise a vector with norm " + std::to_string(n));
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

std::size_t descriptor_dim(int bins) {
  const auto b = static_cast<std::size_t>(bins);
  return b * b * b + kGrayGrid * kGrayGrid;
}

Vector frame_descriptor(const Raster& image, int bins) {
  if (image.height == 0 || image.width == 0 || image.rgb.empty()) throw_invalid("empty raster");
  if (image.rgb.size() != image.height * image.width * 3) throw_invalid("raster buffer does not match its dimensions");
  if (image.height < kGrayGrid || image.width < kGrayGrid) throw_invalid("raster must be at least 8x8");
  if (bins != 2 && bins != 4 && bins != 8) throw_invalid("bins must be 2, 4 or 8");

  const auto b = static_cast<std::size_t>(bins);
  const std::size_t hist_size = b * b * b;
  Vector out(descriptor_dim(bins), 0.0);

  std::vector<double> gray_sum(kGrayGrid * kGrayGrid, 0.0);
  std::vector<std::size_t> gray_count(kGrayGrid * kGrayGrid, 0);
  for (std::size_t y = 0; y < image.height; ++y) {
    const std::size_t gy = y * kGrayGrid / image.height;
    for (std::size_t x = 0; x < image.width; ++x) {
      const std::size_t gx = x * kGrayGrid / image.width;
      const unsigned r = image.at(y, x, 0), g = image.at(y, x, 1), bl = image.at(y, x, 2);
      const std::size_t bin = (r * b / 256) * b * b + (g * b / 256) * b + (bl * b / 256);
      out[bin] += 1.0;
      gray_sum[gy * kGrayGrid + gx] += 0.299 * r + 0.587 * g + 0.114 * bl;
      ++gray_count[gy * kGrayGrid + gx];
    }
  }

  const double pixels = static_cast<double>(image.height * image.width);
  for (std::size_t i = 0; i < hist_size; ++i) out[i] /= pixels;

  for (std::size_t i = 0; i < gray_sum.size(); ++i) gray_sum[i] /= static_cast<double>(gray_count[i]);
  const auto [lo, hi] = std::minmax_element(gray_sum.begin(), gray_sum.end());
  const double range = *hi - *lo;
  // a flat thumbnail carries no layout information and maps to zeros
  for (std::size_t i = 0; i < gray_sum.size(); ++i)
    out[hist_size + i] = range > 0.0 ? (gray_sum[i] - *lo) / range : 0.0;

  return normalize(out);
}

ShotFeatures shot_feature(const Shot& shot, const FrameSequence& frames) {
  if (shot.start < 0 || shot.end < shot.start || shot.end >= frames.frame_count())
    throw_invalid("shot [" + std::to_string(shot.start) + ", " + std::to_string(shot.end) +
                  "] outside frame range of " + frames.video_id);
  Vector mean(frames.dim(), 0.0);
  for (long f = shot.start; f <= shot.end; ++f) axpy(1.0, frames.frame(f), mean);
  ShotFeatures out;
  out.shot_feature = normalize(mean);
  const auto first = frames.frame(shot.start);
  const auto last = frames.frame(shot.end);
  out.first_frame.assign(first.begin(), first.end());
  out.last_frame.assign(last.begin(), last.end());
  return out;
}

ShotFeatureSet shot_features(const ShotList& shots, const FrameSequence& frames) {
  ShotFeatureSet out;
  for (const auto& s : shots.shots) out.emplace(s.id, shot_feature(s, frames));
  return out;
}

namespace {

struct ParsedFeatureFile {
  std::string video_id;
  std::string kind;
  std::size_t dim = 0;
  std::vector<std::pair<long long, Vector>> rows;
};

ParsedFeatureFile parse_feature_file(const std::filesystem::path& path) {
  const auto records = jsonl::read_file(path);
  const std::string source = path.string();
  if (records.empty()) throw FormatError(source, 0, "empty feature file");

  ParsedFeatureFile out;
  {
    jsonl::FieldReader header(records.front(), source);
    out.video_id = header.string("video_id");
    const long long dim = header.integer("dim");
    if (dim < 1) header.fail("dim must be >= 1");
    out.dim = static_cast<std::size_t>(dim);
    out.kind = header.string("kind");
    if (out.kind != "frame" && out.kind != "shot") header.fail("kind must be \"frame\" or \"shot\"");
  }

  long long previous = -1;
  for (std::size_t i = 1; i < records.size(); ++i) {
    jsonl::FieldReader row(records[i], source);
    const long long index = row.integer("index");
    if (index <= previous) row.fail("indices must be strictly increasing");
    previous = index;
    auto values = row.reals("feature");
    if (values.size() != out.dim)
      row.fail("feature has dimension " + std::to_string(values.size()) + ", header declares " + std::to_string(out.dim));
    if (!(l2_norm(values) > kMinNorm)) row.fail("zero feature vector");
    out.rows.emplace_back(index, normalize(values));
  }
  return out;
}

jsonl::Json feature_row(long long index, std::span<const double> values) {
  return {{"index", index}, {"feature", std::vector<double>(values.begin(), values.end())}};
}

}  // namespace

FrameSequence load_precomputed(const std::filesystem::path& path) {
  auto parsed = parse_feature_file(path);
  if (parsed.kind != "frame") throw FormatError(path.string(), 1, "expected kind \"frame\"");
  FrameSequence out;
  out.video_id = parsed.video_id;
  out.features = Matrix(parsed.rows.size(), parsed.dim);
  for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
    if (parsed.rows[i].first != static_cast<long long>(i))
      throw FormatError(path.string(), 0, "frame indices must be contiguous from 0 (missing frame " + std::to_string(i) + ")");
    std::copy(parsed.rows[i].second.begin(), parsed.rows[i].second.end(), out.features.row(i).begin());
  }
  return out;
}

ShotFeatureFile load_shot_features(const std::filesystem::path& path) {
  auto parsed = parse_feature_file(path);
  if (parsed.kind != "shot") throw FormatError(path.string(), 1, "expected kind \"shot\"");
  ShotFeatureFile out;
  out.video_id = parsed.video_id;
  out.dim = parsed.dim;
  for (auto& [index, v] : parsed.rows) out.features.emplace(static_cast<int>(index), std::move(v));
  return out;
}

void apply_shot_feature_overrides(ShotFeatureSet& set, const ShotFeatureFile& overrides) {
  for (auto& [id, entry] : set) {
    auto it = overrides.features.find(id);
    if (it != overrides.features.end()) entry.shot_feature = it->second;
  }
}

void write_frame_features(const std::filesystem::path& path, const FrameSequence& frames) {
  std::vector<jsonl::Json> lines;
  lines.reserve(frames.features.rows + 1);
  lines.push_back({{"video_id", frames.video_id}, {"dim", frames.dim()}, {"kind", "frame"}});
  for (long f = 0; f < frames.frame_count(); ++f) lines.push_back(feature_row(f, frames.frame(f)));
  jsonl::write_file(path, lines);
}

void write_shot_features(const std::filesystem::path& path, const ShotFeatureFile& file) {
  std::vector<jsonl::Json> lines;
  lines.push_back({{"video_id", file.video_id}, {"dim", file.dim}, {"kind", "shot"}});
  for (const auto& [id, v] : file.features) lines.push_back(feature_row(id, v));
  jsonl::write_file(path, lines);
}

FrameSequence make_frame_sequence(std::string video_id, const std::vector<Vector>& rows) {
  if (rows.empty()) throw_invalid("empty frame sequence");
  FrameSequence out;
  out.video_id = std::move(video_id);
  out.features = Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.dim()) throw_invalid("frame " + std::to_string(i) + " has mismatched dimension");
    const auto n = normalize(rows[i]);
    std::copy(n.begin(), n.end(), out.features.row(i).begin());
  }
  return out;
}

}  // namespace pseudocam
