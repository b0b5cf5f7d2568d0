#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/kmeans.hpp"
#include "pseudocam/rng.hpp"
#include "pseudocam/shot.hpp"

namespace pseudocam {

enum class Strategy { MostSimilar, Random, Top5NoCluster };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

struct Candidate {
  int shot_id = 0;
  int camera_id = 0;
  long frame = 0;  // first frame of the candidate shot

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline constexpr std::size_t kPastFrames = 16;
inline constexpr long kPastStride = 5;

/// One training / evaluation example. past_frames runs from the most recent
/// frame backwards; past_offsets[i] = switch_frame - past_frames[i].
struct PseudoInstance {
  std::string video_id;
  int anchor_shot = 0;
  long switch_frame = 0;
  std::vector<long> past_frames;
  std::vector<long> past_offsets;
  std::vector<Candidate> candidates;  // ordered by camera_id
  int gt_index = 0;

  friend bool operator==(const PseudoInstance&, const PseudoInstance&) = default;
};

struct BuildConfig {
  Strategy strategy = Strategy::MostSimilar;
  std::uint64_t seed = 0;
  /// Switch gap is drawn uniformly from [1, gap_max].
  int gap_max = 1;
};

/// Dot product of two unit vectors. Throws InvalidInput on mismatched dims.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Picks the candidate set for switching from `anchor` into `gt`, or nullopt
/// when some pseudo camera has no eligible shot. `rng` is only drawn from by
/// the random strategy.
std::optional<std::vector<Candidate>> select_candidates(const Shot& anchor, const Shot& gt, const ShotList& shots,
                                                        const CameraAssignment& assign, const ShotFeatureSet& feats,
                                                        Strategy strategy, Rng& rng);

/// 16 frames at stride 5 back from anchor.end, clamped to anchor.start.
std::vector<long> past_frame_indices(const Shot& anchor);

/// One instance per adjacent (anchor, successor) pair of retained shots joined
/// by a hard cut; pairs whose candidate selection is skipped are dropped.
/// Random draws come from a stream derived from (cfg.seed, video_id).
std::vector<PseudoInstance> build_instances(const ShotList& retained, const ShotFeatureSet& feats,
                                            const CameraAssignment& assign, const BuildConfig& cfg);

/// Structural checks on one instance; returns a list of violations (empty
/// when valid).
std::vector<std::string> instance_violations(const PseudoInstance& inst, int k);

/// Checks that additionally need the video's full (unfiltered) shot list: every
/// referenced shot exists, none entered through a gradual transition, frames
/// match shot starts and past frames lie inside the anchor shot.
std::vector<std::string> instance_violations(const PseudoInstance& inst, int k, const ShotList& all_shots);

struct DatasetHeader {
  Strategy strategy = Strategy::MostSimilar;
  int k = kDefaultCameras;
  std::uint64_t seed = 0;
  int gap_max = 1;
};

struct Dataset {
  DatasetHeader header;
  std::vector<PseudoInstance> instances;
};

void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
std::string dataset_to_text(const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace pseudocam
