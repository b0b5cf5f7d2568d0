#include "pseudocam/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "pseudocam/error.hpp"
#include "pseudocam/rng.hpp"

namespace pseudocam {

std::string_view to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

std::optional<Optimizer> parse_optimizer(std::string_view text) {
  if (text == "adam") return Optimizer::Adam;
  if (text == "sgd") return Optimizer::Sgd;
  return std::nullopt;
}

TrainConfig TrainConfig::paper_parity() {
  TrainConfig c;
  c.epochs = 10;
  c.lr = 1e-5;
  c.batch_size = 2;
  c.seeds = {0, 1, 2};
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw_invalid("epochs must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw_invalid("lr must be finite and >= 0");
  if (batch_size < 1) throw_invalid("batch_size must be >= 1");
  if (seeds.empty()) throw_invalid("at least one seed is required");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw_invalid("split_ratio must lie in (0, 1)");
  if (!(tau > 0.0)) throw_invalid("tau must be > 0");
}

jsonl::Json TrainConfig::to_json() const {
  return {{"epochs", epochs},     {"lr", lr},           {"batch_size", batch_size},
          {"seeds", seeds},       {"optimizer", std::string(to_string(optimizer))},
          {"beta1", beta1},       {"beta2", beta2},     {"eps", eps},
          {"split_ratio", split_ratio}, {"d_model", d_model}, {"d_hidden", d_hidden},
          {"layers", layers},     {"tau", tau}};
}

std::vector<Example> resolve_examples(const Dataset& dataset, const FeatureStore& store) {
  std::vector<Example> out;
  out.reserve(dataset.instances.size());
  for (const auto& inst : dataset.instances) {
    auto it = store.find(inst.video_id);
    if (it == store.end()) throw_invalid("no frame features for video " + inst.video_id);
    const FrameSequence& frames = it->second;
    const auto fetch = [&](long frame, std::span<double> dst) {
      if (frame < 0 || frame >= frames.frame_count())
        throw_invalid("frame " + std::to_string(frame) + " outside video " + inst.video_id);
      const auto src = frames.frame(frame);
      std::copy(src.begin(), src.end(), dst.begin());
    };
    Example ex;
    ex.video_id = inst.video_id;
    ex.input.past = Matrix(inst.past_frames.size(), frames.dim());
    ex.input.candidates = Matrix(inst.candidates.size(), frames.dim());
    for (std::size_t i = 0; i < inst.past_frames.size(); ++i) fetch(inst.past_frames[i], ex.input.past.row(i));
    for (std::size_t j = 0; j < inst.candidates.size(); ++j) fetch(inst.candidates[j].frame, ex.input.candidates.row(j));
    ex.input.offsets = inst.past_offsets;
    ex.input.gt_index = inst.gt_index;
    out.push_back(std::move(ex));
  }
  return out;
}

std::pair<std::vector<PseudoInstance>, std::vector<PseudoInstance>> split_by_video(
    const std::vector<PseudoInstance>& instances, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw_invalid("split ratio must lie in (0, 1)");
  std::vector<std::string> videos;
  {
    std::set<std::string> seen;
    for (const auto& inst : instances) seen.insert(inst.video_id);
    videos.assign(seen.begin(), seen.end());
  }
  if (videos.size() < 2) throw Error(ErrorKind::CannotSplit, "a split by video needs at least two videos");

  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = videos.size() - 1; i > 0; --i) std::swap(videos[i], videos[rng.uniform_index(i + 1)]);

  const auto v = static_cast<long>(videos.size());
  const long n_train = std::clamp(std::lround(ratio * static_cast<double>(v)), 1L, v - 1);
  const std::set<std::string> train_videos(videos.begin(), videos.begin() + n_train);

  std::pair<std::vector<PseudoInstance>, std::vector<PseudoInstance>> out;
  for (const auto& inst : instances) (train_videos.count(inst.video_id) ? out.first : out.second).push_back(inst);
  return out;
}

namespace {

struct AdamState {
  ModelParams m, v;
  long step = 0;
};

void apply_update(ModelParams& params, ModelParams& grads, const TrainConfig& cfg, AdamState& state) {
  auto p = params.tensors();
  auto g = grads.tensors();
  if (cfg.optimizer == Optimizer::Sgd) {
    for (std::size_t t = 0; t < p.size(); ++t) axpy(-cfg.lr, g[t].values, p[t].values);
    return;
  }
  ++state.step;
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].values.size(); ++i) {
      const double gi = g[t].values[i];
      double& mi = m[t].values[i];
      double& vi = v[t].values[i];
      mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * gi;
      vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * gi * gi;
      p[t].values[i] -= cfg.lr * (mi / c1) / (std::sqrt(vi / c2) + cfg.eps);
    }
  }
}

}  // namespace

TrainResult train(const std::vector<Example>& data, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (data.empty()) throw_invalid("cannot train on an empty dataset");
  ModelDims dims;
  dims.d_f = data.front().input.past.cols;
  dims.d_model = cfg.d_model;
  dims.d_hidden = cfg.d_hidden;
  dims.layers = cfg.layers;
  dims.k = static_cast<int>(data.front().input.candidates.rows);

  TrainResult out;
  out.params = ModelParams::initialize(dims, cfg.tau, seed);
  AdamState adam{out.params.zeros_like(), out.params.zeros_like(), 0};
  Rng rng(derive_seed(seed, "shuffle"));

  std::vector<std::size_t> order(data.size());
  std::vector<double> item_loss(data.size());
  std::vector<ModelInput> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]].input);
      auto result = batch_gradient(batch, out.params);
      for (std::size_t i = start; i < end; ++i) item_loss[order[i]] = result.losses[i - start];
      apply_update(out.params, result.grads, cfg, adam);
    }
    // summed in dataset order so the epoch mean does not depend on the shuffle
    double sum = 0.0;
    for (double l : item_loss) sum += l;
    out.loss_history.push_back(sum / static_cast<double>(data.size()));
  }
  return out;
}

double accuracy_from_predictions(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.empty()) throw_invalid("cannot score an empty prediction set");
  if (predictions.size() != truth.size()) throw_invalid("prediction and truth counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double evaluate(const ModelParams& params, const std::vector<Example>& data) {
  if (data.empty()) throw_invalid("cannot evaluate on an empty dataset");
  std::vector<int> predictions(data.size()), truth(data.size());
  std::vector<std::exception_ptr> failures(data.size());
  const auto n = static_cast<long>(data.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      predictions[idx] = forward(data[idx].input, params).prediction;
    } catch (...) {
      failures[idx] = std::current_exception();
    }
    truth[idx] = data[idx].input.gt_index;
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return accuracy_from_predictions(predictions, truth);
}

double random_baseline_accuracy(const std::vector<Example>& data, std::uint64_t seed) {
  if (data.empty()) throw_invalid("cannot evaluate on an empty dataset");
  Rng rng(derive_seed(seed, "random-baseline"));
  std::vector<int> predictions, truth;
  for (const auto& ex : data) {
    predictions.push_back(static_cast<int>(rng.uniform_index(ex.input.candidates.rows)));
    truth.push_back(ex.input.gt_index);
  }
  return accuracy_from_predictions(predictions, truth);
}

EvalReport make_report(std::vector<double> per_seed, std::size_t n_instances) {
  EvalReport r;
  r.per_seed_accuracy = std::move(per_seed);
  r.n_instances = n_instances;
  if (r.per_seed_accuracy.empty()) return r;
  const double n = static_cast<double>(r.per_seed_accuracy.size());
  for (double a : r.per_seed_accuracy) r.mean += a;
  r.mean /= n;
  double var = 0.0;
  for (double a : r.per_seed_accuracy) var += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(var / n);
  return r;
}

std::string EvalReport::summary() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f\xC2\xB1%.2f", mean, std);
  return buf;
}

EvalReport run_seeds(const TrainConfig& cfg, const std::vector<Example>& train_set, const std::vector<Example>& test_set) {
  cfg.validate();
  std::vector<double> accuracies;
  for (auto seed : cfg.seeds) {
    const auto trained = train(train_set, cfg, seed);
    accuracies.push_back(evaluate(trained.params, test_set));
  }
  return make_report(std::move(accuracies), test_set.size());
}

jsonl::Json report_to_json(const EvalReport& report, const TrainConfig& cfg) {
  return {{"per_seed", report.per_seed_accuracy},
          {"mean", report.mean},
          {"std", report.std},
          {"n_instances", report.n_instances},
          {"summary", report.summary()},
          {"config", cfg.to_json()}};
}

}  // namespace pseudocam
