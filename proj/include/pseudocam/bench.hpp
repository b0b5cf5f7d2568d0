#pragma once

#include <string>
#include <vector>

#include "pseudocam/config.hpp"
#include "pseudocam/synthetic.hpp"
#include "pseudocam/train.hpp"

namespace pseudocam {

/// End-to-end run on synthetic videos: shot detection, pseudo-camera recovery
/// and learnability of the generated dataset.
struct BenchSpec {
  SyntheticSpec synthetic;
  int n_videos = 24;
  RunConfig run;
  double ari_threshold = 0.9;
  double accuracy_threshold = 50.0;

  static BenchSpec defaults();
  static BenchSpec from_json(const jsonl::Json& j, const std::string& source);
  jsonl::Json to_json() const;
};

struct BenchReport {
  std::size_t videos = 0;
  std::size_t videos_with_exact_shots = 0;
  std::vector<double> mean_ari_per_seed;
  std::size_t train_instances = 0;
  EvalReport accuracy;
  double random_baseline = 0.0;
  bool ari_pass = false;
  bool accuracy_pass = false;

  bool passed() const { return ari_pass && accuracy_pass; }
  jsonl::Json to_json() const;
};

/// Detected shots mapped to the true camera of the generated shot containing
/// each detected shot's midpoint.
std::vector<int> true_labels_for(const ShotList& detected, const SyntheticVideo& video);

/// Runs the detector on every generated video and pairs the result with its
/// frames, ready for build_dataset.
std::vector<VideoInput> detect_corpus(const std::vector<SyntheticVideo>& corpus, const DetectorParams& detector);

/// Mean ARI between pseudo-camera labels and true cameras over the accepted
/// videos of a built dataset.
double mean_cluster_ari(const BuiltDataset& built, const std::vector<SyntheticVideo>& corpus);

BenchReport run_bench(const BenchSpec& spec);

}  // namespace pseudocam
