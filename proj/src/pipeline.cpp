#include "pseudocam/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <set>

#include "pseudocam/error.hpp"
#include "pseudocam/rng.hpp"

namespace pseudocam {

std::uint64_t camera_seed(std::uint64_t global_seed, const std::string& video_id) {
  return derive_seed(global_seed, "cameras/" + video_id);
}

VideoOutcome process_video(const VideoInput& video, const PipelineConfig& cfg) {
  if (video.frames.video_id != video.shots.video_id)
    throw_invalid("features of " + video.frames.video_id + " paired with shots of " + video.shots.video_id);
  if (video.shots.frame_count != video.frames.frame_count())
    throw_invalid(video.shots.video_id + ": shot list covers " + std::to_string(video.shots.frame_count) +
                  " frames but the feature file has " + std::to_string(video.frames.frame_count()));
  validate_shot_list(video.shots, true);

  VideoOutcome out;
  out.video_id = video.shots.video_id;
  out.retained = apply_filters(video.shots);
  out.accepted = out.retained.accepted;
  if (!out.accepted) return out;

  auto features = shot_features(out.retained, video.frames);
  if (video.shot_feature_overrides) apply_shot_feature_overrides(features, *video.shot_feature_overrides);

  out.assignment = assign_cameras(out.retained, features, cfg.k, camera_seed(cfg.seed, out.video_id), cfg.kmeans_max_iters);
  BuildConfig build{cfg.strategy, cfg.seed, cfg.gap_max};
  out.instances = build_instances(out.retained, features, *out.assignment, build);
  for (std::size_t i = 0; i + 1 < out.retained.shots.size(); ++i) {
    const Shot& a = out.retained.shots[i];
    const Shot& b = out.retained.shots[i + 1];
    if (b.transition_in == Transition::Hard && b.start == a.end + 1) ++out.candidate_pairs;
  }
  return out;
}

BuiltDataset build_dataset(const std::vector<VideoInput>& videos, const PipelineConfig& cfg) {
  std::vector<std::size_t> order(videos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return videos[a].shots.video_id < videos[b].shots.video_id; });
  {
    std::set<std::string> ids;
    for (const auto& v : videos)
      if (!ids.insert(v.shots.video_id).second) throw_invalid("duplicate video id " + v.shots.video_id);
  }

  BuiltDataset out;
  out.videos.resize(videos.size());
  std::vector<std::exception_ptr> failures(videos.size());
  const auto n = static_cast<long>(videos.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    try {
      out.videos[slot] = process_video(videos[order[slot]], cfg);
    } catch (...) {
      failures[slot] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  out.dataset.header = {cfg.strategy, cfg.k, cfg.seed, cfg.gap_max};
  for (const auto& v : out.videos)
    out.dataset.instances.insert(out.dataset.instances.end(), v.instances.begin(), v.instances.end());
  return out;
}

}  // namespace pseudocam
