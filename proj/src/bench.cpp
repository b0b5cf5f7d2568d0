#include "pseudocam/bench.hpp"

#include <algorithm>
#include <map>

#include "pseudocam/error.hpp"
#include "pseudocam/shots.hpp"

namespace pseudocam {

BenchSpec BenchSpec::defaults() {
  BenchSpec s;
  s.synthetic.video_id = "bench";
  return s;
}

BenchSpec BenchSpec::from_json(const jsonl::Json& j, const std::string& source) {
  if (!j.is_object()) throw FormatError(source, 0, "bench spec must be a JSON object");
  BenchSpec s = defaults();
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "synthetic") s.synthetic = SyntheticSpec::from_json(v);
      else if (key == "n_videos") s.n_videos = v.get<int>();
      else if (key == "run") s.run.merge(v, source);
      else if (key == "ari_threshold") s.ari_threshold = v.get<double>();
      else if (key == "accuracy_threshold") s.accuracy_threshold = v.get<double>();
      else throw FormatError(source, 0, "unknown bench spec key \"" + key + "\"");
    }
  } catch (const jsonl::Json::exception& e) {
    throw FormatError(source, 0, std::string("bad bench spec value: ") + e.what());
  }
  if (s.n_videos < 2) throw FormatError(source, 0, "n_videos must be >= 2");
  try {
    s.synthetic.validate();
  } catch (const Error& e) {
    throw FormatError(source, 0, e.what());
  }
  return s;
}

jsonl::Json BenchSpec::to_json() const {
  return {{"synthetic", synthetic.to_json()},
          {"n_videos", n_videos},
          {"run", run.to_json()},
          {"ari_threshold", ari_threshold},
          {"accuracy_threshold", accuracy_threshold}};
}

jsonl::Json BenchReport::to_json() const {
  return {{"videos", videos},
          {"videos_with_exact_shots", videos_with_exact_shots},
          {"mean_ari_per_seed", mean_ari_per_seed},
          {"train_instances", train_instances},
          {"test_instances", accuracy.n_instances},
          {"per_seed_accuracy", accuracy.per_seed_accuracy},
          {"mean_accuracy", accuracy.mean},
          {"std_accuracy", accuracy.std},
          {"summary", accuracy.summary()},
          {"random_baseline", random_baseline},
          {"ari_pass", ari_pass},
          {"accuracy_pass", accuracy_pass}};
}

std::vector<int> true_labels_for(const ShotList& detected, const SyntheticVideo& video) {
  std::vector<int> labels;
  for (const auto& s : detected.shots) {
    const long mid = (s.start + s.end) / 2;
    const auto it = std::find_if(video.shots.shots.begin(), video.shots.shots.end(),
                                 [&](const Shot& t) { return t.start <= mid && mid <= t.end; });
    if (it == video.shots.shots.end()) throw_invalid("detected shot outside the generated video");
    labels.push_back(video.true_camera[static_cast<std::size_t>(it - video.shots.shots.begin())]);
  }
  return labels;
}

std::vector<VideoInput> detect_corpus(const std::vector<SyntheticVideo>& corpus, const DetectorParams& detector) {
  std::vector<VideoInput> out(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out[i].frames = corpus[i].frames;
    out[i].shots = detect_cuts(corpus[i].frames, detector);
  }
  return out;
}

double mean_cluster_ari(const BuiltDataset& built, const std::vector<SyntheticVideo>& corpus) {
  std::map<std::string, const SyntheticVideo*> by_id;
  for (const auto& v : corpus) by_id[v.frames.video_id] = &v;
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& outcome : built.videos) {
    if (!outcome.assignment) continue;
    const auto truth = true_labels_for(outcome.retained, *by_id.at(outcome.video_id));
    std::vector<int> predicted;
    for (const auto& s : outcome.retained.shots) predicted.push_back(outcome.assignment->camera(s.id));
    total += adjusted_rand_index(predicted, truth);
    ++n;
  }
  if (n == 0) throw_invalid("no accepted videos to score");
  return total / static_cast<double>(n);
}

BenchReport run_bench(const BenchSpec& spec) {
  spec.run.train.validate();
  const auto corpus = generate_corpus(spec.synthetic, spec.n_videos);
  const auto inputs = detect_corpus(corpus, spec.run.detector);

  BenchReport report;
  report.videos = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& detected = inputs[i].shots.shots;
    const auto& truth = corpus[i].shots.shots;
    const bool exact = detected.size() == truth.size() &&
                       std::equal(detected.begin(), detected.end(), truth.begin(),
                                  [](const Shot& a, const Shot& b) { return a.start == b.start && a.end == b.end; });
    if (exact) ++report.videos_with_exact_shots;
  }

  report.ari_pass = true;
  for (auto seed : spec.run.train.seeds) {
    PipelineConfig cfg = spec.run.pipeline;
    cfg.seed = seed;
    const auto built = build_dataset(inputs, cfg);
    const double ari = mean_cluster_ari(built, corpus);
    report.mean_ari_per_seed.push_back(ari);
    report.ari_pass = report.ari_pass && ari >= spec.ari_threshold;
  }

  const auto built = build_dataset(inputs, spec.run.pipeline);
  FeatureStore store;
  for (const auto& v : corpus) store.emplace(v.frames.video_id, v.frames);
  auto [train_part, test_part] = split_by_video(built.dataset.instances, spec.run.train.split_ratio, spec.run.pipeline.seed);
  Dataset train_ds{built.dataset.header, std::move(train_part)};
  Dataset test_ds{built.dataset.header, std::move(test_part)};
  const auto train_set = resolve_examples(train_ds, store);
  const auto test_set = resolve_examples(test_ds, store);
  report.train_instances = train_set.size();
  report.accuracy = run_seeds(spec.run.train, train_set, test_set);
  report.random_baseline = random_baseline_accuracy(test_set, spec.run.pipeline.seed);
  report.accuracy_pass = report.accuracy.mean >= spec.accuracy_threshold;
  return report;
}

}  // namespace pseudocam
