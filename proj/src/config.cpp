#include "pseudocam/config.hpp"

#include <fstream>
#include <sstream>

#include "pseudocam/error.hpp"

namespace pseudocam {

void RunConfig::merge(const jsonl::Json& j, const std::string& source) {
  if (!j.is_object()) throw FormatError(source, 0, "config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "k") pipeline.k = v.get<int>();
      else if (key == "seed") pipeline.seed = v.get<std::uint64_t>();
      else if (key == "strategy") {
        const auto s = parse_strategy(v.get<std::string>());
        if (!s) throw FormatError(source, 0, "unknown strategy " + v.dump());
        pipeline.strategy = *s;
      } else if (key == "gap_max") pipeline.gap_max = v.get<int>();
      else if (key == "kmeans_max_iters") pipeline.kmeans_max_iters = v.get<int>();
      else if (key == "hard_k") detector.hard_k = v.get<double>();
      else if (key == "gradual_window") detector.gradual_window = v.get<int>();
      else if (key == "gradual_theta") detector.gradual_theta = v.get<double>();
      else if (key == "min_cut") detector.min_cut = v.get<double>();
      else if (key == "min_shot_length") detector.min_shot_length = v.get<long>();
      else if (key == "bins") bins = v.get<int>();
      else if (key == "jobs") jobs = v.get<int>();
      else if (key == "paper_parity") paper_parity = v.get<bool>();
      else if (key == "epochs") train.epochs = v.get<int>();
      else if (key == "lr") train.lr = v.get<double>();
      else if (key == "batch_size") train.batch_size = v.get<int>();
      else if (key == "seeds") train.seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "optimizer") {
        const auto o = parse_optimizer(v.get<std::string>());
        if (!o) throw FormatError(source, 0, "unknown optimizer " + v.dump());
        train.optimizer = *o;
      } else if (key == "beta1") train.beta1 = v.get<double>();
      else if (key == "beta2") train.beta2 = v.get<double>();
      else if (key == "eps") train.eps = v.get<double>();
      else if (key == "split_ratio") train.split_ratio = v.get<double>();
      else if (key == "d_model") train.d_model = v.get<std::size_t>();
      else if (key == "d_hidden") train.d_hidden = v.get<std::size_t>();
      else if (key == "layers") train.layers = v.get<int>();
      else if (key == "tau") train.tau = v.get<double>();
      else throw FormatError(source, 0, "unknown config key \"" + key + "\"");
    }
  } catch (const jsonl::Json::exception& e) {
    throw FormatError(source, 0, std::string("bad config value: ") + e.what());
  }
  if (paper_parity) apply_paper_parity();
}

void RunConfig::apply_paper_parity() {
  paper_parity = true;
  const auto preset = TrainConfig::paper_parity();
  train.epochs = preset.epochs;
  train.lr = preset.lr;
  train.batch_size = preset.batch_size;
  train.seeds = preset.seeds;
}

jsonl::Json RunConfig::to_json() const {
  jsonl::Json j = train.to_json();
  j["k"] = pipeline.k;
  j["seed"] = pipeline.seed;
  j["strategy"] = std::string(to_string(pipeline.strategy));
  j["gap_max"] = pipeline.gap_max;
  j["kmeans_max_iters"] = pipeline.kmeans_max_iters;
  j["hard_k"] = detector.hard_k;
  j["gradual_window"] = detector.gradual_window;
  j["gradual_theta"] = detector.gradual_theta;
  j["min_cut"] = detector.min_cut;
  j["min_shot_length"] = detector.min_shot_length;
  j["bins"] = bins;
  j["jobs"] = jobs;
  j["paper_parity"] = paper_parity;
  return j;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "no config file at " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  jsonl::Json j;
  try {
    j = jsonl::Json::parse(text.str());
  } catch (const jsonl::Json::parse_error& e) {
    throw FormatError(path.string(), 0, std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  c.merge(j, path.string());
  return c;
}

std::filesystem::path write_resolved_config(const std::filesystem::path& output, const RunConfig& config) {
  std::filesystem::path out = output;
  out += ".config.json";
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw Error(ErrorKind::MissingArtifact, "cannot write " + out.string());
  f << config.to_json().dump(2) << '\n';
  return out;
}

}  // namespace pseudocam
