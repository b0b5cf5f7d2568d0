#include "pseudocam/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "pseudocam/error.hpp"
#include "pseudocam/rng.hpp"

namespace pseudocam {

void SyntheticSpec::validate() const {
  if (n_cameras < 2) throw_invalid("n_cameras must be >= 2");
  if (dim < static_cast<std::size_t>(n_cameras) + 1) throw_invalid("dim must exceed n_cameras");
  if (!(mean_cosine >= 0.0 && mean_cosine <= 0.2)) throw_invalid("mean_cosine must lie in [0, 0.2]");
  if (!camera_means.empty()) {
    if (camera_means.size() != static_cast<std::size_t>(n_cameras)) throw_invalid("camera_means needs n_cameras entries");
    for (const auto& m : camera_means)
      if (m.size() != dim) throw_invalid("camera mean has the wrong dimension");
  }
  if (!(within_noise >= 0.0)) throw_invalid("within_noise must be >= 0");
  if (!(temporal_rho >= 0.0 && temporal_rho < 1.0)) throw_invalid("temporal_rho must lie in [0, 1)");
  if (shot_len_min < 5 || shot_len_max < shot_len_min) throw_invalid("shot lengths must satisfy 5 <= min <= max");
  if (n_shots < 1) throw_invalid("n_shots must be >= 1");
  if (!successor_rule.empty()) {
    if (successor_rule.size() != static_cast<std::size_t>(n_cameras)) throw_invalid("successor_rule needs n_cameras entries");
    for (int c = 0; c < n_cameras; ++c) {
      const int next = successor_rule[static_cast<std::size_t>(c)];
      if (next < 0 || next >= n_cameras || next == c) throw_invalid("successor_rule must map each camera to another camera");
    }
  }
  if (!(determinism > 0.0 && determinism <= 1.0)) throw_invalid("determinism must lie in (0, 1]");
  if (!(scene_weight >= 0.0)) throw_invalid("scene_weight must be >= 0");
  if (!(scene_rho >= 0.0 && scene_rho <= 1.0)) throw_invalid("scene_rho must lie in [0, 1]");
}

jsonl::Json SyntheticSpec::to_json() const {
  jsonl::Json j = {{"video_id", video_id},         {"n_cameras", n_cameras},       {"dim", dim},
                   {"mean_cosine", mean_cosine},   {"means_seed", means_seed},     {"within_noise", within_noise},
                   {"temporal_rho", temporal_rho}, {"shot_len_range", {shot_len_min, shot_len_max}},
                   {"n_shots", n_shots},           {"successor_rule", successor_rule},
                   {"determinism", determinism},   {"scene_weight", scene_weight}, {"scene_rho", scene_rho},
                   {"seed", seed}};
  if (!camera_means.empty()) j["camera_means"] = camera_means;
  return j;
}

SyntheticSpec SyntheticSpec::from_json(const jsonl::Json& j) {
  if (!j.is_object()) throw FormatError("spec", 0, "synthetic spec must be a JSON object");
  SyntheticSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "video_id") s.video_id = value.get<std::string>();
      else if (key == "n_cameras") s.n_cameras = value.get<int>();
      else if (key == "dim") s.dim = value.get<std::size_t>();
      else if (key == "mean_cosine") s.mean_cosine = value.get<double>();
      else if (key == "camera_means") s.camera_means = value.get<std::vector<Vector>>();
      else if (key == "means_seed") s.means_seed = value.get<std::uint64_t>();
      else if (key == "within_noise") s.within_noise = value.get<double>();
      else if (key == "temporal_rho") s.temporal_rho = value.get<double>();
      else if (key == "shot_len_range") {
        const auto r = value.get<std::vector<long>>();
        if (r.size() != 2) throw FormatError("spec", 0, "shot_len_range needs two entries");
        s.shot_len_min = r[0];
        s.shot_len_max = r[1];
      } else if (key == "n_shots") s.n_shots = value.get<int>();
      else if (key == "successor_rule") s.successor_rule = value.get<std::vector<int>>();
      else if (key == "determinism") s.determinism = value.get<double>();
      else if (key == "scene_weight") s.scene_weight = value.get<double>();
      else if (key == "scene_rho") s.scene_rho = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw FormatError("spec", 0, "unknown synthetic spec key \"" + key + "\"");
    }
  } catch (const jsonl::Json::exception& e) {
    throw FormatError("spec", 0, std::string("bad synthetic spec value: ") + e.what());
  }
  return s;
}

std::vector<Vector> make_camera_means(int n, std::size_t dim, double cosine, std::uint64_t seed) {
  if (dim < static_cast<std::size_t>(n) + 1) throw_invalid("dim must exceed the camera count");
  Rng rng(derive_seed(seed, "camera-means"));
  std::vector<Vector> basis;
  while (basis.size() < static_cast<std::size_t>(n) + 1) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    for (const auto& b : basis) axpy(-dot(v, b), b, v);
    if (l2_norm(v) < 1e-6) continue;
    basis.push_back(normalize(v));
  }
  // mixing each direction with the shared one gives pairwise cosine b^2 / (1 + b^2)
  const double mix = std::sqrt(cosine / (1.0 - cosine));
  std::vector<Vector> means;
  for (int c = 0; c < n; ++c) {
    Vector m = basis[static_cast<std::size_t>(c)];
    axpy(mix, basis.back(), m);
    means.push_back(normalize(m));
  }
  return means;
}

namespace {

Vector random_unit(std::size_t dim, Rng& rng) {
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  return normalize(v);
}

}  // namespace

SyntheticVideo generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto means =
      spec.camera_means.empty() ? make_camera_means(spec.n_cameras, spec.dim, spec.mean_cosine, spec.means_seed) : spec.camera_means;
  std::vector<int> rule = spec.successor_rule;
  if (rule.empty())
    for (int c = 0; c < spec.n_cameras; ++c) rule.push_back((c + 1) % spec.n_cameras);

  Rng rng(spec.seed);
  SyntheticVideo out;
  out.shots.video_id = spec.video_id;

  int camera = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(spec.n_cameras)));
  Vector scene = random_unit(spec.dim, rng);
  std::vector<Vector> rows;
  for (int s = 0; s < spec.n_shots; ++s) {
    if (s > 0) {
      if (rng.uniform() < spec.determinism) {
        camera = rule[static_cast<std::size_t>(camera)];
      } else {
        auto other = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(spec.n_cameras - 1)));
        camera = other >= camera ? other + 1 : other;
      }
      Vector fresh = random_unit(spec.dim, rng);
      for (std::size_t i = 0; i < spec.dim; ++i)
        scene[i] = spec.scene_rho * scene[i] + std::sqrt(1.0 - spec.scene_rho * spec.scene_rho) * fresh[i];
      scene = normalize(scene);
    }
    const long length = rng.uniform_int(spec.shot_len_min, spec.shot_len_max);
    const long start = static_cast<long>(rows.size());
    out.shots.shots.push_back({s, start, start + length - 1, s == 0 ? Transition::VideoStart : Transition::Hard});
    out.true_camera.push_back(camera);

    Vector noise(spec.dim);
    for (double& x : noise) x = rng.normal();
    const double innovation = std::sqrt(1.0 - spec.temporal_rho * spec.temporal_rho);
    for (long f = 0; f < length; ++f) {
      if (f > 0)
        for (double& x : noise) x = spec.temporal_rho * x + innovation * rng.normal();
      Vector frame = means[static_cast<std::size_t>(camera)];
      axpy(spec.scene_weight, scene, frame);
      axpy(spec.within_noise, noise, frame);
      rows.push_back(std::move(frame));
    }
  }
  out.frames = make_frame_sequence(spec.video_id, rows);
  out.shots.frame_count = out.frames.frame_count();
  out.shots.accepted = out.shots.hard_transition_count() >= kMinHardTransitions;
  return out;
}

std::vector<SyntheticVideo> generate_corpus(const SyntheticSpec& spec, int n_videos) {
  std::vector<SyntheticVideo> out(static_cast<std::size_t>(n_videos));
  SyntheticSpec base = spec;
  if (base.camera_means.empty()) base.camera_means = make_camera_means(spec.n_cameras, spec.dim, spec.mean_cosine, spec.means_seed);
  std::vector<std::exception_ptr> failures(out.size());
#pragma omp parallel for schedule(dynamic)
  for (int v = 0; v < n_videos; ++v) {
    try {
      SyntheticSpec s = base;
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_%03d", v);
      s.video_id = spec.video_id + suffix;
      s.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(v));
      out[static_cast<std::size_t>(v)] = generate(s);
    } catch (...) {
      failures[static_cast<std::size_t>(v)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw_invalid("labelings differ in length");
  if (a.size() < 2) throw_invalid("ARI needs at least two labels");
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  const auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, n] : cells) index += pairs(n);
  for (const auto& [_, n] : rows) sum_rows += pairs(n);
  for (const auto& [_, n] : cols) sum_cols += pairs(n);
  const double expected = sum_rows * sum_cols / pairs(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  // both partitions trivial (all singletons or one block): agreement is exact
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace pseudocam
