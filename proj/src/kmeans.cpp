#include "pseudocam/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "pseudocam/error.hpp"
#include "pseudocam/rng.hpp"

namespace pseudocam {

namespace {

int nearest_index(std::span<const double> x, const Matrix& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double dist = squared_distance(x, centroids.row(c));
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Matrix plus_plus_init(const Matrix& points, int k, Rng& rng) {
  const std::size_t n = points.rows;
  Matrix centroids(static_cast<std::size_t>(k), points.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t chosen = rng.uniform_index(n);
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      if (!(total > 0.0))
        throw Error(ErrorKind::TooFewShots, "fewer than " + std::to_string(k) + " distinct points to cluster");
      const double r = rng.uniform() * total;
      double cumulative = 0.0;
      chosen = n;
      std::size_t last_positive = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] > 0.0) last_positive = i;
        cumulative += d2[i];
        if (cumulative > r) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) chosen = last_positive;
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centroids.row(static_cast<std::size_t>(c)).begin());
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(c))));
  }
  return centroids;
}

Matrix cluster_means(const Matrix& points, const std::vector<int>& labels, const Matrix& previous) {
  Matrix sums(previous.rows, previous.cols);
  std::vector<std::size_t> counts(previous.rows, 0);
  for (std::size_t i = 0; i < points.rows; ++i) {  // fixed order keeps sums bit-reproducible
    axpy(1.0, points.row(i), sums.row(static_cast<std::size_t>(labels[i])));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t c = 0; c < sums.rows; ++c) {
    if (counts[c] == 0) {
      std::copy(previous.row(c).begin(), previous.row(c).end(), sums.row(c).begin());
      continue;
    }
    for (double& v : sums.row(c)) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

/// Moves the farthest point into each empty cluster until none is empty.
void fill_empty_clusters(const Matrix& points, Matrix& centroids, std::vector<int>& labels) {
  const std::size_t k = centroids.rows;
  for (std::size_t round = 0; round <= 2 * k; ++round) {
    std::vector<std::size_t> counts(k, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    const auto empty = std::find(counts.begin(), counts.end(), 0u);
    if (empty == counts.end()) return;

    std::size_t farthest = points.rows;
    double farthest_d = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
      const double dist = squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
      if (dist > farthest_d) {
        farthest_d = dist;
        farthest = i;
      }
    }
    if (farthest == points.rows)
      throw Error(ErrorKind::TooFewShots, "fewer than " + std::to_string(k) + " distinct points to cluster");
    const auto c = static_cast<std::size_t>(empty - counts.begin());
    std::copy(points.row(farthest).begin(), points.row(farthest).end(), centroids.row(c).begin());
    labels = nearest_centroids(points, centroids);
  }
  throw Error(ErrorKind::TooFewShots, "could not populate every cluster");
}

}  // namespace

std::vector<int> nearest_centroids(const Matrix& points, const Matrix& centroids) {
  std::vector<int> labels(points.rows);
  const auto n = static_cast<long>(points.rows);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = nearest_index(points.row(static_cast<std::size_t>(i)), centroids);
  return labels;
}

std::vector<int> nearest_centroids_serial(const Matrix& points, const Matrix& centroids) {
  std::vector<int> labels(points.rows);
  for (std::size_t i = 0; i < points.rows; ++i) labels[i] = nearest_index(points.row(i), centroids);
  return labels;
}

double inertia(const Matrix& points, const Matrix& centroids, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i)
    total += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
  return total;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
  if (k < 1) throw_invalid("k must be >= 1");
  if (max_iters < 1) throw_invalid("max_iters must be >= 1");
  if (points.rows < static_cast<std::size_t>(k))
    throw Error(ErrorKind::TooFewShots,
                std::to_string(points.rows) + " points cannot form " + std::to_string(k) + " clusters");
  if (points.cols == 0) throw_invalid("points must have dimension >= 1");

  Rng rng(seed);
  KMeansResult out;
  out.centroids = plus_plus_init(points, k, rng);
  out.labels = nearest_centroids(points, out.centroids);
  fill_empty_clusters(points, out.centroids, out.labels);
  out.inertia_history.push_back(inertia(points, out.centroids, out.labels));

  for (int iter = 1; iter <= max_iters; ++iter) {
    Matrix centroids = cluster_means(points, out.labels, out.centroids);
    auto labels = nearest_centroids(points, centroids);
    fill_empty_clusters(points, centroids, labels);
    out.inertia_history.push_back(inertia(points, centroids, labels));
    out.iterations = iter;
    const bool stable = labels == out.labels;
    out.centroids = std::move(centroids);
    out.labels = std::move(labels);
    if (stable) break;
  }
  out.inertia = out.inertia_history.back();
  return out;
}

CameraAssignment assign_cameras(const ShotList& shots, const ShotFeatureSet& features, int k, std::uint64_t seed,
                                int max_iters) {
  if (shots.shots.empty()) throw Error(ErrorKind::TooFewShots, shots.video_id + " has no shots");
  const std::size_t dim = [&] {
    auto it = features.find(shots.shots.front().id);
    if (it == features.end()) throw_invalid("missing feature for shot " + std::to_string(shots.shots.front().id));
    return it->second.shot_feature.size();
  }();
  Matrix points(shots.shots.size(), dim);
  for (std::size_t i = 0; i < shots.shots.size(); ++i) {
    auto it = features.find(shots.shots[i].id);
    if (it == features.end()) throw_invalid("missing feature for shot " + std::to_string(shots.shots[i].id));
    if (it->second.shot_feature.size() != dim) throw_invalid("shot features have mixed dimensions");
    std::copy(it->second.shot_feature.begin(), it->second.shot_feature.end(), points.row(i).begin());
  }
  if (points.rows < static_cast<std::size_t>(k))
    throw Error(ErrorKind::TooFewShots, shots.video_id + ": " + std::to_string(points.rows) +
                                            " shots cannot fill " + std::to_string(k) + " pseudo cameras");

  auto result = kmeans(points, k, seed, max_iters);
  CameraAssignment out;
  out.video_id = shots.video_id;
  out.k = k;
  out.seed = seed;
  out.centroids = std::move(result.centroids);
  out.inertia = result.inertia;
  for (std::size_t i = 0; i < shots.shots.size(); ++i) out.camera_of.emplace(shots.shots[i].id, result.labels[i]);
  return out;
}

void append_assignment_lines(std::vector<jsonl::Json>& lines, const CameraAssignment& a) {
  lines.push_back({{"video_id", a.video_id}, {"k", a.k}, {"seed", a.seed}, {"inertia", a.inertia}});
  for (const auto& [shot, camera] : a.camera_of) lines.push_back({{"shot_id", shot}, {"camera", camera}});
}

std::vector<CameraAssignment> read_assignment_file(const std::filesystem::path& path) {
  const std::string source = path.string();
  std::vector<CameraAssignment> out;
  for (const auto& record : jsonl::read_file(path)) {
    jsonl::FieldReader row(record, source);
    if (row.has("k")) {
      CameraAssignment a;
      a.video_id = row.string("video_id");
      a.k = static_cast<int>(row.integer("k"));
      a.seed = static_cast<std::uint64_t>(record.value.at("seed").get<std::uint64_t>());
      a.inertia = row.real("inertia");
      out.push_back(std::move(a));
      continue;
    }
    if (out.empty()) row.fail("assignment record before any header");
    const int camera = static_cast<int>(row.integer("camera"));
    if (camera < 0 || camera >= out.back().k) row.fail("camera id out of range");
    out.back().camera_of[static_cast<int>(row.integer("shot_id"))] = camera;
  }
  return out;
}

}  // namespace pseudocam
