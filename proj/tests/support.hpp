#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pseudocam/features.hpp"
#include "pseudocam/instances.hpp"
#include "pseudocam/kmeans.hpp"
#include "pseudocam/model.hpp"
#include "pseudocam/linalg.hpp"
#include "pseudocam/rng.hpp"
#include "pseudocam/shot.hpp"

namespace testing {

using namespace pseudocam;

inline Vector basis(std::size_t dim, std::size_t i) {
  Vector v(dim, 0.0);
  v[i] = 1.0;
  return v;
}

inline Vector random_unit(Rng& rng, std::size_t dim) {
  Vector v(dim);
  for (auto& x : v) x = rng.normal();
  return normalize(v);
}

/// Scratch directory removed when the object goes out of scope.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pseudocam_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Consecutive shots with the given lengths; transitions[i] is the entry of
/// shot i (the first is forced to video_start).
inline ShotList make_shots(const std::string& video_id, const std::vector<long>& lengths,
                           const std::vector<Transition>& transitions = {}) {
  ShotList list;
  list.video_id = video_id;
  long start = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Shot s;
    s.id = static_cast<int>(i);
    s.start = start;
    s.end = start + lengths[i] - 1;
    s.transition_in = i == 0 ? Transition::VideoStart : (i < transitions.size() ? transitions[i] : Transition::Hard);
    start = s.end + 1;
    list.shots.push_back(s);
  }
  list.frame_count = start;
  list.accepted = list.hard_transition_count() >= kMinHardTransitions;
  return list;
}

/// Frames that repeat one vector per block.
inline FrameSequence block_frames(const std::string& video_id, const std::vector<Vector>& blocks,
                                  const std::vector<long>& lengths) {
  std::vector<Vector> rows;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (long i = 0; i < lengths[b]; ++i) rows.push_back(blocks[b]);
  return make_frame_sequence(video_id, rows);
}

inline Matrix rows_to_matrix(const std::vector<Vector>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  return m;
}

/// Exhaustive most_similar check of one instance: the ground truth must be the
/// anchor's successor and every other slot the best-scoring eligible shot of
/// its camera (scan in id order, strict improvement only). Returns the number
/// of slots that disagree.
inline int most_similar_mismatches(const PseudoInstance& inst, const ShotList& retained, const CameraAssignment& assign,
                                   const ShotFeatureSet& feats) {
  int mismatches = 0;
  std::size_t pos = retained.shots.size();
  for (std::size_t i = 0; i < retained.shots.size(); ++i)
    if (retained.shots[i].id == inst.anchor_shot) pos = i;
  if (pos + 1 >= retained.shots.size()) return static_cast<int>(inst.candidates.size());
  const Shot& gt = retained.shots[pos + 1];
  if (inst.candidates[static_cast<std::size_t>(inst.gt_index)].shot_id != gt.id) ++mismatches;
  const auto& last = feats.at(inst.anchor_shot).last_frame;
  for (int c = 0; c < assign.k; ++c) {
    const auto& cand = inst.candidates[static_cast<std::size_t>(c)];
    if (cand.camera_id != c) ++mismatches;
    if (c == assign.camera(gt.id)) continue;
    int best = -1;
    double best_sim = 0.0;
    for (const auto& s : retained.shots) {
      if (s.id == inst.anchor_shot || s.id == gt.id || assign.camera(s.id) != c) continue;
      double sim = 0.0;
      const auto& first = feats.at(s.id).first_frame;
      for (std::size_t j = 0; j < first.size(); ++j) sim += last[j] * first[j];
      if (best < 0 || sim > best_sim) {
        best = s.id;
        best_sim = sim;
      }
    }
    if (cand.shot_id != best) ++mismatches;
  }
  return mismatches;
}

inline ModelInput random_input(Rng& rng, std::size_t d_f, int k) {
  ModelInput in;
  in.past = Matrix(kPastFrames, d_f);
  for (std::size_t r = 0; r < kPastFrames; ++r) {
    const auto v = random_unit(rng, d_f);
    std::copy(v.begin(), v.end(), in.past.row(r).begin());
    in.offsets.push_back(1 + static_cast<long>(r) * kPastStride + static_cast<long>(rng.uniform_index(3)));
  }
  in.candidates = Matrix(static_cast<std::size_t>(k), d_f);
  for (int c = 0; c < k; ++c) {
    const auto v = random_unit(rng, d_f);
    std::copy(v.begin(), v.end(), in.candidates.row(static_cast<std::size_t>(c)).begin());
  }
  in.gt_index = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)));
  return in;
}

/// Parameters with every tensor perturbed away from its initial value, so
/// layer norms and the latent token are not at special points.
inline ModelParams perturbed_params(const ModelDims& dims, double tau, std::uint64_t seed) {
  auto p = ModelParams::initialize(dims, tau, seed);
  Rng rng(seed ^ 0x5eedULL);
  for (auto& t : p.tensors())
    for (auto& v : t.values) v += 0.1 * rng.normal();
  return p;
}

struct GradCheck {
  double worst_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t coordinates = 0;
  std::size_t tensors = 0;
};

/// Compares backward() with central differences on `per_tensor` random
/// coordinates of every tensor. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(const ModelInput& input, ModelParams p, Rng& rng, std::size_t per_tensor,
                                 double h = 1e-4, double floor = 1e-7) {
  auto grads = p.zeros_like();
  backward(input, p, grads);
  auto params_view = p.tensors();
  auto grads_view = grads.tensors();
  GradCheck out;
  for (std::size_t t = 0; t < params_view.size(); ++t) {
    auto& values = params_view[t].values;
    const std::size_t n = std::min(per_tensor, values.size());
    std::vector<std::size_t> coords;
    if (n == values.size()) {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(rng.uniform_index(values.size()));
    }
    for (std::size_t i : coords) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = forward(input, p).nce.loss;
      values[i] = saved - h;
      const double down = forward(input, p).nce.loss;
      values[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads_view[t].values[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      if (rel > out.worst_relative_error) {
        out.worst_relative_error = rel;
        out.worst_tensor = params_view[t].name;
      }
      ++out.coordinates;
    }
    ++out.tensors;
  }
  return out;
}

}  // namespace testing
