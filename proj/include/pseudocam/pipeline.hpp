#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/instances.hpp"
#include "pseudocam/kmeans.hpp"
#include "pseudocam/shots.hpp"

namespace pseudocam {

struct PipelineConfig {
  int k = kDefaultCameras;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::MostSimilar;
  int gap_max = 1;
  int kmeans_max_iters = 100;
};

/// Everything the dataset builder needs for one video.
struct VideoInput {
  FrameSequence frames;
  ShotList shots;  // unfiltered, tiling the video
  std::optional<ShotFeatureFile> shot_feature_overrides;
};

struct VideoOutcome {
  std::string video_id;
  bool accepted = false;
  ShotList retained;
  std::optional<CameraAssignment> assignment;
  std::vector<PseudoInstance> instances;
  std::size_t candidate_pairs = 0;  // adjacent hard-cut pairs that were attempted
};

/// Seed used to cluster one video, derived from the global seed and the id.
std::uint64_t camera_seed(std::uint64_t global_seed, const std::string& video_id);

/// Filters, clusters and builds instances for one video. Rejected videos
/// (fewer than 10 hard cuts after filtering) yield no instances.
VideoOutcome process_video(const VideoInput& video, const PipelineConfig& cfg);

struct BuiltDataset {
  Dataset dataset;
  std::vector<VideoOutcome> videos;  // ordered by video id
};

/// Processes videos in parallel; output order is by video id whatever the
/// thread count.
BuiltDataset build_dataset(const std::vector<VideoInput>& videos, const PipelineConfig& cfg);

}  // namespace pseudocam
