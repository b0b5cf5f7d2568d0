#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "pseudocam/bench.hpp"
#include "pseudocam/config.hpp"
#include "pseudocam/error.hpp"
#include "pseudocam/features.hpp"
#include "pseudocam/pipeline.hpp"
#include "pseudocam/png_io.hpp"
#include "pseudocam/shots.hpp"
#include "pseudocam/synthetic.hpp"
#include "pseudocam/train.hpp"

namespace pseudocam::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFeatureSuffix = ".features.jsonl";
constexpr const char* kShotSuffix = ".shots.jsonl";

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::optional<std::string> strategy;
  std::optional<int> gap_max;
  bool paper_parity = false;
  std::optional<int> jobs;

  std::optional<double> hard_k, gradual_theta, min_cut;
  std::optional<int> gradual_window, bins;

  std::optional<int> epochs, batch_size, layers;
  std::optional<double> lr, tau, split_ratio;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> optimizer;
  std::optional<std::size_t> d_model, d_hidden;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Flat JSON config file");
  app->add_option("--seed", o.seed, "Global seed");
  app->add_option("--k", o.k, "Number of pseudo cameras");
  app->add_option("--strategy", o.strategy, "Candidate selection")
      ->check(CLI::IsMember({"most_similar", "random", "top5_no_cluster"}));
  app->add_option("--gap-max", o.gap_max, "Switch gaps are drawn from [1, gap-max]");
  app->add_flag("--paper-parity", o.paper_parity, "epochs=10, lr=1e-5, batch=2, seeds=3");
  app->add_option("--jobs", o.jobs, "Worker threads (0 = OpenMP default)");
}

void add_detector(CLI::App* app, Overrides& o) {
  app->add_option("--hard-k", o.hard_k, "Hard cut threshold in standard deviations");
  app->add_option("--gradual-window", o.gradual_window, "Drift window in frames");
  app->add_option("--gradual-theta", o.gradual_theta, "Drift threshold for gradual transitions");
  app->add_option("--min-cut", o.min_cut, "Absolute floor for hard cut dissimilarity");
  app->add_option("--bins", o.bins, "Histogram bins per channel for PNG frames")->check(CLI::IsMember({2, 4, 8}));
}

void add_training(CLI::App* app, Overrides& o) {
  app->add_option("--epochs", o.epochs);
  app->add_option("--lr", o.lr);
  app->add_option("--batch-size", o.batch_size);
  app->add_option("--seeds", o.seeds, "Training seeds");
  app->add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  app->add_option("--tau", o.tau);
  app->add_option("--d-model", o.d_model);
  app->add_option("--d-hidden", o.d_hidden);
  app->add_option("--layers", o.layers);
  app->add_option("--split-ratio", o.split_ratio);
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config ? RunConfig::load(*o.config) : RunConfig{};
  if (o.paper_parity) c.apply_paper_parity();
  if (o.seed) c.pipeline.seed = *o.seed;
  if (o.k) c.pipeline.k = *o.k;
  if (o.strategy) c.pipeline.strategy = *parse_strategy(*o.strategy);
  if (o.gap_max) c.pipeline.gap_max = *o.gap_max;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.hard_k) c.detector.hard_k = *o.hard_k;
  if (o.gradual_window) c.detector.gradual_window = *o.gradual_window;
  if (o.gradual_theta) c.detector.gradual_theta = *o.gradual_theta;
  if (o.min_cut) c.detector.min_cut = *o.min_cut;
  if (o.bins) c.bins = *o.bins;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.lr) c.train.lr = *o.lr;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  if (o.seeds) c.train.seeds = *o.seeds;
  if (o.optimizer) c.train.optimizer = *parse_optimizer(*o.optimizer);
  if (o.tau) c.train.tau = *o.tau;
  if (o.d_model) c.train.d_model = *o.d_model;
  if (o.d_hidden) c.train.d_hidden = *o.d_hidden;
  if (o.layers) c.train.layers = *o.layers;
  if (o.split_ratio) c.train.split_ratio = *o.split_ratio;
  if (c.pipeline.k < 2) throw_invalid("k must be >= 2");
  if (c.pipeline.gap_max < 1) throw_invalid("gap-max must be >= 1");
  if (c.jobs < 0) throw_invalid("jobs must be >= 0");
  if (c.jobs > 0) omp_set_num_threads(c.jobs);
  return c;
}

/// Files are taken as given; directories contribute every entry ending in `suffix`.
std::vector<fs::path> expand(const std::vector<std::string>& inputs, const std::string& suffix) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(p)) throw Error(ErrorKind::MissingArtifact, "no such file " + p.string());
      out.push_back(p);
    }
  }
  return out;
}

FeatureStore load_store(const std::vector<std::string>& inputs) {
  FeatureStore store;
  for (const auto& path : expand(inputs, kFeatureSuffix)) {
    auto frames = load_precomputed(path);
    const auto id = frames.video_id;
    if (!store.emplace(id, std::move(frames)).second) throw_invalid("two feature files for video " + id);
  }
  if (store.empty()) throw_invalid("no feature files given");
  return store;
}

void write_json(const fs::path& path, const jsonl::Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---- detect-shots ---------------------------------------------------------

struct DetectArgs {
  Overrides o;
  std::optional<std::string> features, frames, features_out;
  std::string out;
};

int cmd_detect_shots(const DetectArgs& a) {
  const RunConfig cfg = resolve(a.o);
  if (a.features.has_value() == a.frames.has_value()) throw_invalid("give exactly one of --features or --frames");
  FrameSequence frames =
      a.features ? load_precomputed(*a.features) : describe_frame_directory(*a.frames, cfg.bins);
  if (a.features_out) write_frame_features(*a.features_out, frames);
  const ShotList shots = detect_cuts(frames, cfg.detector);
  write_shot_list(a.out, shots);
  write_resolved_config(a.out, cfg);
  std::cout << shots.video_id << ": " << shots.shots.size() << " shots, " << shots.hard_transition_count()
            << " hard cuts, " << (shots.accepted ? "accepted" : "rejected") << '\n';
  return kOk;
}

// ---- build-dataset --------------------------------------------------------

struct BuildArgs {
  Overrides o;
  std::vector<std::string> features, shots, shot_features;
  std::string out;
  std::optional<std::string> assignments;
};

int cmd_build_dataset(const BuildArgs& a) {
  const RunConfig cfg = resolve(a.o);
  FeatureStore store = load_store(a.features);

  std::map<std::string, ShotList> shot_lists;
  for (const auto& path : expand(a.shots, kShotSuffix)) {
    auto list = ingest_shot_list(path);
    const auto id = list.video_id;
    if (!shot_lists.emplace(id, std::move(list)).second) throw_invalid("two shot lists for video " + id);
  }
  std::map<std::string, ShotFeatureFile> overrides;
  for (const auto& path : expand(a.shot_features, ".jsonl")) {
    auto f = load_shot_features(path);
    const auto id = f.video_id;
    overrides.emplace(id, std::move(f));
  }
  for (const auto& [id, _] : shot_lists)
    if (!store.count(id)) throw_invalid("shot list for " + id + " has no matching feature file");

  std::vector<VideoInput> videos;
  for (auto& [id, frames] : store) {
    VideoInput v;
    auto it = shot_lists.find(id);
    v.shots = it != shot_lists.end() ? it->second : detect_cuts(frames, cfg.detector);
    v.frames = std::move(frames);
    if (auto o = overrides.find(id); o != overrides.end()) v.shot_feature_overrides = o->second;
    videos.push_back(std::move(v));
  }

  const auto built = build_dataset(videos, cfg.pipeline);
  write_dataset(a.out, built.dataset);
  std::vector<jsonl::Json> lines;
  for (const auto& v : built.videos)
    if (v.assignment) append_assignment_lines(lines, *v.assignment);
  const fs::path assign_path = a.assignments ? fs::path(*a.assignments) : fs::path(a.out + ".assign.jsonl");
  jsonl::write_file(assign_path, lines);
  write_resolved_config(a.out, cfg);

  for (const auto& v : built.videos) {
    std::cerr << v.video_id << ": ";
    if (!v.accepted) {
      std::cerr << "rejected (" << v.retained.hard_transition_count() << " hard cuts after filtering)\n";
      continue;
    }
    std::cerr << v.instances.size() << " instances from " << v.candidate_pairs << " hard-cut pairs\n";
  }
  std::cout << built.dataset.instances.size() << " instances written to " << a.out << '\n';
  return kOk;
}

// ---- train / evaluate / report ---------------------------------------------

struct TrainArgs {
  Overrides o;
  std::string dataset;
  std::vector<std::string> features;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = resolve(a.o);
  const auto store = load_store(a.features);
  const auto examples = resolve_examples(read_dataset(a.dataset), store);
  const std::uint64_t seed = a.o.seed ? *a.o.seed : cfg.train.seeds.front();
  const auto result = train(examples, cfg.train, seed);
  save_checkpoint(a.out, result.params);
  RunConfig resolved = cfg;
  resolved.train.seeds = {seed};
  write_resolved_config(a.out, resolved);
  write_json(a.out + ".history.json", {{"seed", seed}, {"loss_history", result.loss_history}});
  std::cout << "trained " << examples.size() << " instances for " << cfg.train.epochs
            << " epochs; final loss " << result.loss_history.back() << '\n';
  return kOk;
}

struct EvalArgs {
  Overrides o;
  std::string dataset;
  std::vector<std::string> features;
  std::string checkpoint;
  std::optional<std::string> out;
};

int cmd_evaluate(const EvalArgs& a) {
  const RunConfig cfg = resolve(a.o);
  if (!fs::exists(a.checkpoint)) throw Error(ErrorKind::MissingArtifact, "no checkpoint at " + a.checkpoint);
  const auto params = load_checkpoint(a.checkpoint);
  const auto examples = resolve_examples(read_dataset(a.dataset), load_store(a.features));
  const double acc = evaluate(params, examples);
  char line[64];
  std::snprintf(line, sizeof line, "%.2f", acc);
  std::cout << "accuracy " << line << " on " << examples.size() << " instances\n";
  if (a.out) {
    write_json(*a.out, {{"accuracy", acc}, {"n_instances", examples.size()}, {"checkpoint", a.checkpoint}});
    write_resolved_config(*a.out, cfg);
  }
  return kOk;
}

struct ReportArgs {
  Overrides o;
  std::string dataset;
  std::optional<std::string> test_dataset;
  std::vector<std::string> features;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  const RunConfig cfg = resolve(a.o);
  const auto store = load_store(a.features);
  Dataset train_ds = read_dataset(a.dataset);
  Dataset test_ds;
  if (a.test_dataset) {
    test_ds = read_dataset(*a.test_dataset);
  } else {
    auto [tr, te] = split_by_video(train_ds.instances, cfg.train.split_ratio, cfg.pipeline.seed);
    test_ds = {train_ds.header, std::move(te)};
    train_ds.instances = std::move(tr);
  }
  const auto report =
      run_seeds(cfg.train, resolve_examples(train_ds, store), resolve_examples(test_ds, store));
  write_json(a.out, report_to_json(report, cfg.train));
  write_resolved_config(a.out, cfg);
  std::cout << report.summary() << '\n';
  return kOk;
}

// ---- bench / synth ---------------------------------------------------------

struct BenchArgs {
  Overrides o;
  std::optional<std::string> spec;
  std::optional<std::string> out;
};

jsonl::Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "no such file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return jsonl::Json::parse(text.str());
  } catch (const jsonl::Json::parse_error& e) {
    throw FormatError(path, 0, std::string("malformed JSON: ") + e.what());
  }
}

int cmd_bench(const BenchArgs& a) {
  BenchSpec spec = a.spec ? BenchSpec::from_json(read_json_file(*a.spec), *a.spec) : BenchSpec::defaults();
  if (a.o.jobs && *a.o.jobs > 0) omp_set_num_threads(*a.o.jobs);
  if (a.o.seed) {
    spec.synthetic.seed = *a.o.seed;
    spec.run.pipeline.seed = *a.o.seed;
  }
  const auto report = run_bench(spec);
  char line[160];
  std::snprintf(line, sizeof line, "%s cluster recovery: mean ARI per seed", report.ari_pass ? "PASS" : "FAIL");
  std::cout << line;
  for (double v : report.mean_ari_per_seed) std::cout << ' ' << v;
  std::cout << " (threshold " << spec.ari_threshold << ")\n";
  std::cout << (report.accuracy_pass ? "PASS" : "FAIL") << " learnability: test accuracy " << report.accuracy.summary()
            << " (threshold " << spec.accuracy_threshold << ", random " << report.random_baseline << ")\n";
  std::cout << "shots recovered exactly in " << report.videos_with_exact_shots << "/" << report.videos << " videos\n";
  if (a.out) {
    write_json(*a.out, {{"spec", spec.to_json()}, {"report", report.to_json()}});
  }
  return report.passed() ? kOk : kGateFailed;
}

struct SynthArgs {
  Overrides o;
  std::optional<std::string> spec;
  int videos = 1;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
  SyntheticSpec spec = a.spec ? SyntheticSpec::from_json(read_json_file(*a.spec)) : SyntheticSpec{};
  if (a.o.seed) spec.seed = *a.o.seed;
  if (a.videos < 1) throw_invalid("--videos must be >= 1");
  const auto corpus = generate_corpus(spec, a.videos);
  for (const auto& v : corpus) {
    const fs::path base = fs::path(a.out_dir) / v.frames.video_id;
    write_frame_features(base.string() + kFeatureSuffix, v.frames);
    write_shot_list(base.string() + kShotSuffix, v.shots);
    write_json(base.string() + ".truth.json", {{"video_id", v.frames.video_id}, {"true_camera", v.true_camera}});
  }
  write_json(fs::path(a.out_dir) / "synthetic_spec.json", spec.to_json());
  std::cout << corpus.size() << " synthetic videos written to " << a.out_dir << '\n';
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::FormatError: return kFormat;
    case ErrorKind::MissingArtifact: return kMissingArtifact;
    case ErrorKind::InvalidInput:
    case ErrorKind::DegenerateVector:
    case ErrorKind::TooFewShots:
    case ErrorKind::CannotSplit: return kPrecondition;
  }
  return kPrecondition;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Pseudo-labelled multi-camera view recommendation datasets from edited videos", "pseudocam"};
  app.require_subcommand(1);

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect-shots", "Detect shots in a feature file or PNG frame directory");
  add_common(detect_cmd, detect.o);
  add_detector(detect_cmd, detect.o);
  detect_cmd->add_option("--features", detect.features, "Frame feature file");
  detect_cmd->add_option("--frames", detect.frames, "Directory of PNG frames");
  detect_cmd->add_option("--features-out", detect.features_out, "Write computed frame features here");
  detect_cmd->add_option("--out", detect.out, "Shot-list output")->required();

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-dataset", "Cluster pseudo cameras and emit pseudo instances");
  add_common(build_cmd, build.o);
  add_detector(build_cmd, build.o);
  build_cmd->add_option("--features", build.features, "Frame feature files or directories")->required();
  build_cmd->add_option("--shots", build.shots, "Shot-list files or directories (detected when absent)");
  build_cmd->add_option("--shot-features", build.shot_features, "Shot-level clustering features");
  build_cmd->add_option("--out", build.out, "Dataset output")->required();
  build_cmd->add_option("--assignments", build.assignments, "Assignment output (default <out>.assign.jsonl)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the recommender on a dataset");
  add_common(train_cmd, tr.o);
  add_training(train_cmd, tr.o);
  train_cmd->add_option("--dataset", tr.dataset)->required();
  train_cmd->add_option("--features", tr.features)->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint output")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Classification accuracy of a checkpoint");
  add_common(eval_cmd, ev.o);
  eval_cmd->add_option("--dataset", ev.dataset)->required();
  eval_cmd->add_option("--features", ev.features)->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--out", ev.out, "Optional JSON result");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Train and evaluate over every seed, mean +- std");
  add_common(report_cmd, rep.o);
  add_training(report_cmd, rep.o);
  report_cmd->add_option("--dataset", rep.dataset, "Training dataset (split by video without --test-dataset)")->required();
  report_cmd->add_option("--test-dataset", rep.test_dataset);
  report_cmd->add_option("--features", rep.features)->required();
  report_cmd->add_option("--out", rep.out, "Report JSON")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Synthetic end-to-end gates");
  add_common(bench_cmd, bench.o);
  bench_cmd->add_option("--spec", bench.spec, "Bench spec JSON");
  bench_cmd->add_option("--out", bench.out, "Report JSON");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write synthetic videos as feature and shot-list files");
  add_common(synth_cmd, synth.o);
  synth_cmd->add_option("--spec", synth.spec, "Synthetic spec JSON");
  synth_cmd->add_option("--videos", synth.videos, "Number of videos");
  synth_cmd->add_option("--out-dir", synth.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFormat;
  }

  try {
    if (*detect_cmd) return cmd_detect_shots(detect);
    if (*build_cmd) return cmd_build_dataset(build);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_evaluate(ev);
    if (*report_cmd) return cmd_report(rep);
    if (*bench_cmd) return cmd_bench(bench);
    if (*synth_cmd) return cmd_synth(synth);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPrecondition;
  }
  return kOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "pseudocam");
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace pseudocam::cli
