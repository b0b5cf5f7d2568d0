#pragma once

#include <filesystem>
#include <string>

#include "pseudocam/features.hpp"

namespace pseudocam {

Raster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Raster& image);

/// Describes every *.png in `dir` (lexicographic filename order = frame order)
/// with frame_descriptor. The directory name becomes the video id unless one
/// is given.
FrameSequence describe_frame_directory(const std::filesystem::path& dir, int bins = 4, std::string video_id = {});

}  // namespace pseudocam
