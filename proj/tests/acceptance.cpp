#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "pseudocam/bench.hpp"
#include "pseudocam/error.hpp"
#include "pseudocam/kmeans.hpp"
#include "pseudocam/pipeline.hpp"
#include "pseudocam/shots.hpp"
#include "pseudocam/synthetic.hpp"
#include "pseudocam/train.hpp"
#include "support.hpp"

using namespace pseudocam;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;
int soft_failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body,
               bool soft = false) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = budget_s <= 0 || secs < budget_s;
  const bool pass = out.pass && in_time;
  (soft ? soft_failures : failures) += !pass;
  char timing[64];
  if (budget_s > 0)
    std::snprintf(timing, sizeof timing, "%.1fs, budget %.0fs", secs, budget_s);
  else
    std::snprintf(timing, sizeof timing, "%.1fs", secs);
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << out.detail << " (" << timing << ")"
            << (soft ? " [soft gate]" : "") << std::endl;
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

FeatureStore store_of(const std::vector<SyntheticVideo>& corpus) {
  FeatureStore store;
  for (const auto& v : corpus) store.emplace(v.frames.video_id, v.frames);
  return store;
}

std::vector<VideoInput> inputs_of(const std::vector<SyntheticVideo>& corpus) {
  std::vector<VideoInput> out;
  for (const auto& v : corpus) out.push_back({v.frames, v.shots, std::nullopt});
  return out;
}

}  // namespace

int main() {
  criterion(1, "random baseline over k=6 candidates", 10, [] {
    SyntheticSpec spec;
    spec.video_id = "baseline";
    spec.shot_len_min = 5;
    spec.shot_len_max = 8;
    spec.n_shots = 120;
    const auto corpus = generate_corpus(spec, 100);
    const auto built = build_dataset(inputs_of(corpus), PipelineConfig{});
    const auto examples = resolve_examples(built.dataset, store_of(corpus));
    const double acc = random_baseline_accuracy(examples, 0);
    return Outcome{examples.size() >= 10000 && std::abs(acc - 100.0 / 6) <= 1.0,
                   fmt(acc) + " on " + std::to_string(examples.size()) + " instances (target 16.67 +- 1.0)"};
  });

  criterion(2, "analytic gradients vs central differences", 30, [] {
    Rng rng(2);
    const ModelDims dims{32, 64, 256, 6, 1};
    double worst = 0.0;
    std::string worst_tensor;
    std::size_t coords = 0, tensors = 0;
    for (int i = 0; i < 5; ++i) {
      const auto p = testing::perturbed_params(dims, 0.07, 100 + i);
      const auto input = testing::random_input(rng, dims.d_f, dims.k);
      const auto r = testing::check_gradients(input, p, rng, 20);
      if (r.worst_relative_error > worst) {
        worst = r.worst_relative_error;
        worst_tensor = r.worst_tensor;
      }
      coords += r.coordinates;
      tensors = r.tensors;
    }
    return Outcome{worst <= 1e-4, "max relative error " + fmt_sci(worst) + " (" + worst_tensor + ") over " +
                                      std::to_string(coords) + " coordinates, " + std::to_string(tensors) +
                                      " tensors, 5 instances, tau 0.07"};
  });

  criterion(3, "InfoNCE closed forms", 0, [] {
    Matrix c(6, 7);
    for (int j = 0; j < 6; ++j) c(j, j + 1) = 1.0;
    const Vector past{1, 0, 0, 0, 0, 0, 0};
    const double uniform_err = std::abs(info_nce(past, c, 0, 0.07).loss - std::log(6.0));

    double grad_err = 0.0;
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      Vector s(6);
      for (auto& x : s) x = std::tanh(rng.normal());
      const int gt = static_cast<int>(rng.uniform_index(6));
      const double tau = trial % 2 ? 0.07 : 0.5 + rng.uniform();
      const auto r = info_nce_from_scores(s, gt, tau);
      for (int j = 0; j < 6; ++j) {
        const double h = 1e-6;
        auto up = s, down = s;
        up[j] += h;
        down[j] -= h;
        const double numeric =
            (info_nce_from_scores(up, gt, tau).loss - info_nce_from_scores(down, gt, tau).loss) / (2 * h);
        grad_err = std::max(grad_err, std::abs(numeric - (r.probs[j] - (j == gt)) / tau));
      }
    }
    return Outcome{uniform_err <= 1e-9 && grad_err <= 1e-8,
                   "|L - ln 6| = " + fmt_sci(uniform_err) + ", max |dL/ds - (p - y)/tau| = " + fmt_sci(grad_err)};
  });

  criterion(4, "most_similar selection equals exhaustive argmax", 0, [] {
    SyntheticSpec spec;
    spec.video_id = "oracle";
    spec.within_noise = 0.08;
    std::size_t instances = 0;
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      spec.seed = seed;
      const auto video = generate(spec);
      const auto out = process_video({video.frames, video.shots, std::nullopt}, PipelineConfig{});
      if (!out.accepted) continue;
      const auto feats = shot_features(out.retained, video.frames);
      for (const auto& inst : out.instances)
        mismatches += testing::most_similar_mismatches(inst, out.retained, *out.assignment, feats);
      instances += out.instances.size();
    }
    return Outcome{mismatches == 0 && instances > 0,
                   std::to_string(mismatches) + " mismatches over " + std::to_string(instances) +
                       " instances from 100 videos"};
  });

  criterion(5, "cluster recovery on synthetic 6-camera videos", 60, [] {
    BenchSpec spec = BenchSpec::defaults();
    const auto corpus = generate_corpus(spec.synthetic, spec.n_videos);
    // Separation: smallest distance between camera means over the RMS
    // distance of a frame to its own camera mean.
    const auto means = make_camera_means(spec.synthetic.n_cameras, spec.synthetic.dim, spec.synthetic.mean_cosine,
                                         spec.synthetic.means_seed);
    double between = 1e9;
    for (std::size_t i = 0; i < means.size(); ++i)
      for (std::size_t j = i + 1; j < means.size(); ++j) between = std::min(between, std::sqrt(squared_distance(means[i], means[j])));
    double within_sq = 0.0;
    std::size_t frames = 0;
    for (const auto& v : corpus)
      for (std::size_t s = 0; s < v.shots.shots.size(); ++s)
        for (long t = v.shots.shots[s].start; t <= v.shots.shots[s].end; ++t) {
          within_sq += squared_distance(v.frames.frame(t), means[v.true_camera[s]]);
          ++frames;
        }
    const double separation = between / std::sqrt(within_sq / frames);
    const auto inputs = detect_corpus(corpus, spec.run.detector);
    std::string aris;
    bool ok = separation >= 5;
    for (std::uint64_t seed : {0, 1, 2}) {
      PipelineConfig cfg;
      cfg.seed = seed;
      const double ari = mean_cluster_ari(build_dataset(inputs, cfg), corpus);
      ok = ok && ari >= 0.9;
      aris += (aris.empty() ? "" : ", ") + fmt(ari, 4);
    }
    return Outcome{ok, "mean ARI per seed [" + aris + "] at separation " + fmt(separation, 1) + " over " +
                           std::to_string(corpus.size()) + " videos (target >= 0.9)"};
  });

  criterion(6, "end-to-end learnability at q = 0.9", 300, [] {
    BenchSpec spec = BenchSpec::defaults();
    spec.synthetic.determinism = 0.9;
    const auto report = run_bench(spec);
    std::string per_seed;
    for (double a : report.accuracy.per_seed_accuracy) per_seed += (per_seed.empty() ? "" : ", ") + fmt(a);
    return Outcome{report.accuracy.mean >= 50.0,
                   "test accuracy " + report.accuracy.summary() + " [" + per_seed + "] on " +
                       std::to_string(report.accuracy.n_instances) + " test instances, random " +
                       fmt(report.random_baseline) + " (target >= 50)"};
  });

  criterion(7, "most_similar training beats random-strategy training", 0, [] {
    BenchSpec spec = BenchSpec::defaults();
    const auto corpus = generate_corpus(spec.synthetic, spec.n_videos);
    const auto inputs = detect_corpus(corpus, spec.run.detector);
    const auto store = store_of(corpus);
    PipelineConfig ms_cfg = spec.run.pipeline;
    PipelineConfig rnd_cfg = spec.run.pipeline;
    rnd_cfg.strategy = Strategy::Random;
    const auto ms = build_dataset(inputs, ms_cfg).dataset;
    const auto rnd = build_dataset(inputs, rnd_cfg).dataset;
    const double ratio = spec.run.train.split_ratio;
    auto [ms_train, ms_test] = split_by_video(ms.instances, ratio, ms_cfg.seed);
    auto [rnd_train, rnd_test] = split_by_video(rnd.instances, ratio, ms_cfg.seed);
    const auto test = resolve_examples(Dataset{ms.header, ms_test}, store);
    const auto a = run_seeds(spec.run.train, resolve_examples(Dataset{ms.header, ms_train}, store), test);
    const auto b = run_seeds(spec.run.train, resolve_examples(Dataset{rnd.header, rnd_train}, store), test);
    return Outcome{a.mean > b.mean, "most_similar " + a.summary() + " vs random " + b.summary() +
                                        " on most_similar test instances, 3 seeds"};
  }, true);

  criterion(8, "filtering rules", 0, [] {
    SyntheticSpec spec;
    spec.video_id = "filter";
    spec.n_shots = 10;
    const auto nine = process_video(inputs_of({generate(spec)})[0], PipelineConfig{2});
    spec.n_shots = 11;
    const auto ten = process_video(inputs_of({generate(spec)})[0], PipelineConfig{2});

    spec.n_shots = 60;
    auto corpus = generate_corpus(spec, 8);
    std::map<std::string, ShotList> full;
    Rng rng(8);
    std::size_t gradual = 0;
    for (auto& v : corpus) {
      for (std::size_t s = 1; s < v.shots.shots.size(); ++s)
        if (rng.uniform() < 0.15) {
          v.shots.shots[s].transition_in = Transition::Gradual;
          ++gradual;
        }
      full[v.shots.video_id] = v.shots;
    }
    const auto built = build_dataset(inputs_of(corpus), PipelineConfig{});
    testing::TempDir dir;
    write_dataset(dir / "filtered.jsonl", built.dataset);
    const auto back = read_dataset(dir / "filtered.jsonl");
    std::size_t violations = 0;
    for (const auto& inst : back.instances) violations += instance_violations(inst, 6, full.at(inst.video_id)).size();
    return Outcome{!nine.accepted && nine.instances.empty() && ten.accepted && violations == 0 &&
                       !back.instances.empty(),
                   std::string("9 hard cuts ") + (nine.accepted ? "accepted" : "rejected") + ", 10 hard cuts " +
                       (ten.accepted ? "accepted" : "rejected") + "; " + std::to_string(violations) +
                       " violations over " + std::to_string(back.instances.size()) + " instances with " +
                       std::to_string(gradual) + " gradual shots in the input"};
  });

  criterion(9, "build-dataset + train are byte-reproducible", 0, [] {
    testing::TempDir dir;
    const std::string tool = PSEUDOCAM_TOOL;
    auto sh = [&](const std::string& args) {
      const std::string cmd = "\"" + tool + "\" " + args + " > /dev/null 2>&1";
      return std::system(cmd.c_str());
    };
    const auto d = dir.path().string();
    testing::write_text(dir / "spec.json", "{\"n_shots\":40}");
    if (sh("synth --spec " + d + "/spec.json --videos 6 --out-dir " + d + "/corpus") != 0)
      return Outcome{false, "synth failed"};
    for (const char* run : {"a", "b"}) {
      const std::string out = d + "/" + run;
      if (sh("build-dataset --features " + d + "/corpus --shots " + d + "/corpus --out " + out +
             "/ds.jsonl --seed 7") != 0 ||
          sh("train --dataset " + out + "/ds.jsonl --features " + d + "/corpus --out " + out +
             "/model.ckpt --seed 7 --epochs 2") != 0)
        return Outcome{false, "command failed"};
    }
    const bool same_ds = testing::read_text(dir / "a/ds.jsonl") == testing::read_text(dir / "b/ds.jsonl");
    const bool same_ck = testing::read_text(dir / "a/model.ckpt") == testing::read_text(dir / "b/model.ckpt");
    const bool same_asg =
        testing::read_text(dir / "a/ds.jsonl.assign.jsonl") == testing::read_text(dir / "b/ds.jsonl.assign.jsonl");
    return Outcome{same_ds && same_ck && same_asg && !testing::read_text(dir / "a/ds.jsonl").empty(),
                   std::string("dataset ") + (same_ds ? "identical" : "differs") + ", assignments " +
                       (same_asg ? "identical" : "differ") + ", checkpoint " + (same_ck ? "identical" : "differs")};
  });

  criterion(10, "k-means invariants", 0, [] {
    Rng rng(10);
    int monotone_breaks = 0, label_mismatches = 0;
    std::size_t iterations = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 20 + rng.uniform_index(200);
      const std::size_t dim = 2 + rng.uniform_index(30);
      const int k = 2 + static_cast<int>(rng.uniform_index(9));
      Matrix points(n, dim);
      for (auto& x : points.data) x = rng.normal();
      const auto r = kmeans(points, k, rng.next_u64());
      for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
        monotone_breaks += r.inertia_history[i] > r.inertia_history[i - 1];
      iterations += r.inertia_history.size() - 1;
      const auto recomputed = nearest_centroids_serial(points, r.centroids);
      for (std::size_t i = 0; i < n; ++i) label_mismatches += recomputed[i] != r.labels[i];
    }
    return Outcome{monotone_breaks == 0 && label_mismatches == 0,
                   std::to_string(monotone_breaks) + " inertia increases over " + std::to_string(iterations) +
                       " Lloyd iterations, " + std::to_string(label_mismatches) +
                       " nearest-centroid mismatches, 50 instances"};
  });

  std::cout << (failures == 0 ? "all hard acceptance criteria passed" : std::to_string(failures) + " hard criteria failed")
            << ", " << soft_failures << " soft gate(s) failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
