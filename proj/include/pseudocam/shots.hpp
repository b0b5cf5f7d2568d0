#pragma once

#include <filesystem>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/shot.hpp"

namespace pseudocam {

struct DetectorParams {
  /// Hard cut threshold is mean + hard_k * stddev of the frame dissimilarities.
  double hard_k = 3.0;
  int gradual_window = 10;
  double gradual_theta = 0.5;
  /// Absolute floor under the adaptive threshold.
  double min_cut = 0.05;
  long min_shot_length = 5;
};

/// d_t = 1 - cos(f_t, f_{t+1}) for t in [0, n-2].
std::vector<double> frame_dissimilarities(const FrameSequence& frames);

/// D_t = 1 - cos(f_{max(0, t-window)}, f_t) for t in [0, n-1].
std::vector<double> windowed_drift(const FrameSequence& frames, int window);

/// Splits a video into shots. A hard cut between t and t+1 requires d_t to be
/// a strict maximum over its +-2 neighbourhood and to exceed
/// max(min_cut, mu + hard_k * sigma), where mu and sigma are taken over the
/// dissimilarities that are not such local maxima. A gradual boundary sits at
/// the first peak of each run of frames whose windowed drift exceeds
/// gradual_theta with no hard cut inside the window. Shots shorter than
/// min_shot_length are merged into their predecessor.
ShotList detect_cuts(const FrameSequence& frames, const DetectorParams& params = {});

/// Reads a shot-list file and checks that the shots tile [0, frame_count).
ShotList ingest_shot_list(const std::filesystem::path& path);

void write_shot_list(const std::filesystem::path& path, const ShotList& list);

/// Drops shots entered through a gradual transition and recomputes acceptance.
ShotList apply_filters(const ShotList& list);

/// Throws InvalidInput when the shots are not ordered and disjoint, or (with
/// require_tiling) do not cover [0, frame_count) exactly.
void validate_shot_list(const ShotList& list, bool require_tiling);

bool is_accepted(const ShotList& list);

}  // namespace pseudocam
