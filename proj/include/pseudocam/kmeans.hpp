#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/jsonl.hpp"
#include "pseudocam/linalg.hpp"

namespace pseudocam {

struct KMeansResult {
  std::vector<int> labels;  // one per point
  Matrix centroids;         // k x dim
  double inertia = 0.0;
  /// Inertia after initialisation and after every Lloyd iteration.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// Seeded k-means++ initialisation followed by Lloyd iterations until the
/// labels stop changing or max_iters is reached. Empty clusters are re-seeded
/// with the point farthest from its centroid. Labels are always the nearest
/// centroid under squared Euclidean distance, ties to the lowest index.
/// Points are the rows of `points`. Throws TooFewShots when rows < k (or
/// there are fewer than k distinct points).
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100);

/// Nearest-centroid labels; parallel over points.
std::vector<int> nearest_centroids(const Matrix& points, const Matrix& centroids);

/// Single-threaded reference for nearest_centroids.
std::vector<int> nearest_centroids_serial(const Matrix& points, const Matrix& centroids);

/// Sum of squared distances in fixed point order.
double inertia(const Matrix& points, const Matrix& centroids, const std::vector<int>& labels);

struct CameraAssignment {
  std::string video_id;
  int k = 0;
  std::uint64_t seed = 0;
  std::map<int, int> camera_of;  // shot id -> camera
  Matrix centroids;
  double inertia = 0.0;

  int camera(int shot_id) const { return camera_of.at(shot_id); }
};

inline constexpr int kDefaultCameras = 6;

/// Clusters the shot features of the retained shots into k pseudo cameras.
CameraAssignment assign_cameras(const ShotList& shots, const ShotFeatureSet& features, int k, std::uint64_t seed,
                                int max_iters = 100);

/// Appends one header line {"video_id","k","seed","inertia"} and one
/// {"shot_id","camera"} line per shot.
void append_assignment_lines(std::vector<jsonl::Json>& lines, const CameraAssignment& a);

std::vector<CameraAssignment> read_assignment_file(const std::filesystem::path& path);

}  // namespace pseudocam
