#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/instances.hpp"
#include "pseudocam/jsonl.hpp"
#include "pseudocam/model.hpp"

namespace pseudocam {

enum class Optimizer { Sgd, Adam };

std::string_view to_string(Optimizer o);
std::optional<Optimizer> parse_optimizer(std::string_view text);

struct TrainConfig {
  int epochs = 10;
  double lr = 1e-3;
  int batch_size = 8;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double split_ratio = 0.8;

  std::size_t d_model = 64;
  std::size_t d_hidden = 256;
  int layers = 1;
  double tau = 0.07;

  /// epochs 10, lr 1e-5, batch 2, three seeds.
  static TrainConfig paper_parity();

  void validate() const;
  jsonl::Json to_json() const;
};

/// Frame features of every video a dataset refers to, keyed by video id.
using FeatureStore = std::map<std::string, FrameSequence>;

/// A resolved example plus the video it came from.
struct Example {
  std::string video_id;
  ModelInput input;
};

/// Looks up past-frame and candidate features. Throws InvalidInput when a
/// video or frame is missing from the store.
std::vector<Example> resolve_examples(const Dataset& dataset, const FeatureStore& store);

/// Shuffles the distinct video ids with `seed` and sends round(ratio * V)
/// (clamped to [1, V-1]) videos to the training side.
std::pair<std::vector<PseudoInstance>, std::vector<PseudoInstance>> split_by_video(
    const std::vector<PseudoInstance>& instances, double ratio, std::uint64_t seed);

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // mean loss per epoch
};

TrainResult train(const std::vector<Example>& data, const TrainConfig& cfg, std::uint64_t seed);

/// Percentage of examples whose predicted candidate is the ground truth.
double evaluate(const ModelParams& params, const std::vector<Example>& data);

/// Accuracy of a predictor that picks uniformly among the candidates.
double random_baseline_accuracy(const std::vector<Example>& data, std::uint64_t seed);

double accuracy_from_predictions(const std::vector<int>& predictions, const std::vector<int>& truth);

struct EvalReport {
  std::vector<double> per_seed_accuracy;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n_instances = 0;

  std::string summary() const;  // "MM.MM±S.SS"
};

EvalReport make_report(std::vector<double> per_seed, std::size_t n_instances);

/// Trains and evaluates once per configured seed.
EvalReport run_seeds(const TrainConfig& cfg, const std::vector<Example>& train_set, const std::vector<Example>& test_set);

jsonl::Json report_to_json(const EvalReport& report, const TrainConfig& cfg);

}  // namespace pseudocam
