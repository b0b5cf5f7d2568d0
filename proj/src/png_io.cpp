#include "pseudocam/png_io.hpp"

#include <algorithm>
#include <cstring>
#include <exception>

#include <png.h>

#include "pseudocam/error.hpp"

namespace pseudocam {

Raster read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::MissingArtifact, "no such image " + path.string());
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError(path.string(), 0, std::string("unreadable PNG: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  Raster out;
  out.height = image.height;
  out.width = image.width;
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(path.string(), 0, std::string("PNG decode failed: ") + image.message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, raster.rgb.data(), 0, nullptr))
    throw Error(ErrorKind::MissingArtifact, "cannot write PNG " + path.string() + ": " + image.message);
}

FrameSequence describe_frame_directory(const std::filesystem::path& dir, int bins, std::string video_id) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::MissingArtifact, "no such frame directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw_invalid("no PNG frames in " + dir.string());

  std::vector<Vector> rows(files.size());
  std::vector<std::exception_ptr> failures(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      rows[i] = frame_descriptor(read_png(files[i]), bins);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  if (video_id.empty()) {
    auto p = std::filesystem::absolute(dir).lexically_normal();
    if (p.filename().empty()) p = p.parent_path();
    video_id = p.filename().string();
  }
  return make_frame_sequence(std::move(video_id), rows);
}

}  // namespace pseudocam
