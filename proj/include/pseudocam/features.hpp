#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pseudocam/linalg.hpp"
#include "pseudocam/shot.hpp"

namespace pseudocam {

/// Per-frame unit feature vectors of one video, one row per frame.
struct FrameSequence {
  std::string video_id;
  Matrix features;

  long frame_count() const { return static_cast<long>(features.rows); }
  std::size_t dim() const { return features.cols; }
  std::span<const double> frame(long index) const { return features.row(static_cast<std::size_t>(index)); }
};

/// Interleaved 8-bit RGB raster, row-major.
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t channel) const {
    return rgb[(y * width + x) * 3 + channel];
  }
};

struct ShotFeatures {
  Vector shot_feature;
  Vector first_frame;
  Vector last_frame;
};

/// Keyed by Shot::id.
using ShotFeatureSet = std::map<int, ShotFeatures>;

inline constexpr double kMinNorm = 1e-12;

/// v / ||v||. Throws DegenerateVector when ||v|| <= 1e-12.
Vector normalize(std::span<const double> v);

inline constexpr std::size_t kGrayGrid = 8;

/// bins^3 RGB histogram (L1-normalised) followed by an 8x8 mean-pooled
/// grayscale thumbnail rescaled to [0, 1], the whole vector unit-normalised.
/// Dimension is bins^3 + 64.
Vector frame_descriptor(const Raster& image, int bins = 4);

std::size_t descriptor_dim(int bins);

/// Shot feature is the normalised mean of the shot's frame features; the
/// endpoint features are the frames at shot.start and shot.end.
ShotFeatures shot_feature(const Shot& shot, const FrameSequence& frames);

ShotFeatureSet shot_features(const ShotList& shots, const FrameSequence& frames);

/// Frame-level feature file. Rows are re-normalised on load.
FrameSequence load_precomputed(const std::filesystem::path& path);

/// Shot-level feature file (kind "shot"), keyed by shot id.
struct ShotFeatureFile {
  std::string video_id;
  std::size_t dim = 0;
  std::map<int, Vector> features;
};

ShotFeatureFile load_shot_features(const std::filesystem::path& path);

/// Replaces the clustering feature of every shot present in `overrides`.
void apply_shot_feature_overrides(ShotFeatureSet& set, const ShotFeatureFile& overrides);

void write_frame_features(const std::filesystem::path& path, const FrameSequence& frames);
void write_shot_features(const std::filesystem::path& path, const ShotFeatureFile& file);

/// Builds a FrameSequence from raw rows, normalising each; used by the
/// in-memory paths that bypass files.
FrameSequence make_frame_sequence(std::string video_id, const std::vector<Vector>& rows);

}  // namespace pseudocam
