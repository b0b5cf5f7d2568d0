#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/jsonl.hpp"
#include "pseudocam/shot.hpp"

namespace pseudocam {

/// Parameters of a synthetic multi-camera edit. Every frame of a shot from
/// camera c is normalize(mean_c + scene_weight * scene + within_noise * n_t),
/// where n_t is AR(1) Gaussian noise within the shot and `scene` is a unit
/// vector that drifts from shot to shot (content continuity across cuts).
struct SyntheticSpec {
  std::string video_id = "synthetic";
  int n_cameras = 6;
  std::size_t dim = 32;
  /// Pairwise cosine of the generated camera means (<= 0.2).
  double mean_cosine = 0.1;
  /// Explicit camera means; generated from means_seed when empty.
  std::vector<Vector> camera_means;
  std::uint64_t means_seed = 1;
  double within_noise = 0.02;
  double temporal_rho = 0.5;
  long shot_len_min = 20;
  long shot_len_max = 40;
  int n_shots = 60;
  /// successor_rule[c] is the camera that follows c; cyclic when empty.
  std::vector<int> successor_rule;
  /// Probability of following successor_rule; otherwise a uniformly drawn other camera.
  double determinism = 0.9;
  double scene_weight = 0.0;
  double scene_rho = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
  jsonl::Json to_json() const;
  static SyntheticSpec from_json(const jsonl::Json& j);
};

struct SyntheticVideo {
  FrameSequence frames;
  std::vector<int> true_camera;  // per shot
  ShotList shots;
};

/// Gram-Schmidt on seeded Gaussian draws, then mixed with one shared
/// direction so every pair has cosine exactly `cosine`.
std::vector<Vector> make_camera_means(int n, std::size_t dim, double cosine, std::uint64_t seed);

SyntheticVideo generate(const SyntheticSpec& spec);

/// n videos sharing the camera means of `spec`, with per-video seeds derived
/// from spec.seed and ids "<video_id>_000", "<video_id>_001", ...
std::vector<SyntheticVideo> generate_corpus(const SyntheticSpec& spec, int n_videos);

/// Chance-corrected agreement between two labelings, in [-1, 1].
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace pseudocam
