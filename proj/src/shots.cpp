#include "pseudocam/shots.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pseudocam/error.hpp"
#include "pseudocam/jsonl.hpp"

namespace pseudocam {

std::string_view to_string(Transition t) {
  switch (t) {
    case Transition::VideoStart: return "video_start";
    case Transition::Hard: return "hard";
    case Transition::Gradual: return "gradual";
  }
  return "unknown";
}

std::optional<Transition> parse_transition(std::string_view text) {
  if (text == "video_start") return Transition::VideoStart;
  if (text == "hard") return Transition::Hard;
  if (text == "gradual") return Transition::Gradual;
  return std::nullopt;
}

std::size_t ShotList::hard_transition_count() const {
  return static_cast<std::size_t>(
      std::count_if(shots.begin(), shots.end(), [](const Shot& s) { return s.transition_in == Transition::Hard; }));
}

const Shot* ShotList::find(int id) const {
  auto it = std::lower_bound(shots.begin(), shots.end(), id, [](const Shot& s, int v) { return s.id < v; });
  return it != shots.end() && it->id == id ? &*it : nullptr;
}

bool is_accepted(const ShotList& list) { return list.hard_transition_count() >= kMinHardTransitions; }

std::vector<double> frame_dissimilarities(const FrameSequence& frames) {
  const long n = frames.frame_count();
  std::vector<double> d(n > 1 ? static_cast<std::size_t>(n - 1) : 0);
#pragma omp parallel for
  for (long t = 0; t < n - 1; ++t) d[static_cast<std::size_t>(t)] = 1.0 - dot(frames.frame(t), frames.frame(t + 1));
  return d;
}

std::vector<double> windowed_drift(const FrameSequence& frames, int window) {
  const long n = frames.frame_count();
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for
  for (long t = 0; t < n; ++t)
    out[static_cast<std::size_t>(t)] = 1.0 - dot(frames.frame(std::max(0L, t - window)), frames.frame(t));
  return out;
}

namespace {

void check_unit_rows(const FrameSequence& frames) {
  for (long t = 0; t < frames.frame_count(); ++t) {
    const double n = l2_norm(frames.frame(t));
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6)
      throw_invalid("frame " + std::to_string(t) + " of " + frames.video_id + " is not unit-norm");
  }
}

bool strict_local_max(const std::vector<double>& d, std::size_t t, std::size_t radius) {
  const std::size_t lo = t >= radius ? t - radius : 0;
  const std::size_t hi = std::min(d.size() - 1, t + radius);
  for (std::size_t s = lo; s <= hi; ++s)
    if (s != t && !(d[t] > d[s])) return false;
  return true;
}

struct Boundary {
  long frame;  // first frame of the new shot
  Transition type;
};

}  // namespace

ShotList detect_cuts(const FrameSequence& frames, const DetectorParams& params) {
  if (frames.frame_count() < 2) throw_invalid("shot detection needs at least 2 frames");
  if (frames.dim() < 1) throw_invalid("frame features must have dimension >= 1");
  if (!(params.hard_k > 0.0)) throw_invalid("hard_k must be > 0");
  if (params.gradual_window < 2) throw_invalid("gradual_window must be >= 2");
  if (params.min_shot_length < 1) throw_invalid("min_shot_length must be >= 1");
  check_unit_rows(frames);

  const long n = frames.frame_count();
  const auto d = frame_dissimilarities(frames);

  std::vector<bool> peak(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) peak[t] = d.size() == 1 || strict_local_max(d, t, 2);

  // Local maxima are left out of the statistics so that densely cut videos do
  // not inflate sigma past their own cuts.
  double sum = 0.0, count = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t)
    if (!peak[t]) sum += d[t], count += 1.0;
  const bool use_all = count == 0.0;
  if (use_all) sum = std::accumulate(d.begin(), d.end(), 0.0), count = static_cast<double>(d.size());
  const double mean = sum / count;
  double var = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t)
    if (use_all || !peak[t]) var += (d[t] - mean) * (d[t] - mean);
  const double threshold = std::max(params.min_cut, mean + params.hard_k * std::sqrt(var / count));

  std::vector<bool> hard_at(static_cast<std::size_t>(n), false);  // hard_at[b]: shot starts at b via a hard cut
  for (std::size_t t = 0; t < d.size(); ++t)
    if (peak[t] && d[t] > threshold) hard_at[t + 1] = true;

  std::vector<long> hard_prefix(static_cast<std::size_t>(n) + 1, 0);
  for (long b = 0; b < n; ++b) hard_prefix[b + 1] = hard_prefix[b] + (hard_at[b] ? 1 : 0);
  const auto hard_in = [&](long lo, long hi) {  // any hard boundary in [lo, hi]
    lo = std::max(lo, 0L);
    return hi >= lo && hard_prefix[hi + 1] - hard_prefix[lo] > 0;
  };

  const auto drift = windowed_drift(frames, params.gradual_window);
  std::vector<bool> gradual_at(static_cast<std::size_t>(n), false);
  for (long t = 1; t < n;) {
    const auto candidate = [&](long s) { return drift[s] > params.gradual_theta && !hard_in(s - params.gradual_window + 1, s); };
    if (!candidate(t)) {
      ++t;
      continue;
    }
    long best = t;
    long s = t;
    for (; s < n && candidate(s); ++s)
      if (drift[s] > drift[best]) best = s;
    gradual_at[best] = true;
    t = s;
  }

  std::vector<Boundary> boundaries;
  for (long b = 1; b < n; ++b) {
    if (hard_at[b]) boundaries.push_back({b, Transition::Hard});
    else if (gradual_at[b]) boundaries.push_back({b, Transition::Gradual});
  }

  std::vector<Boundary> kept;
  long current_start = 0;
  for (const auto& b : boundaries) {
    if (b.frame - current_start < params.min_shot_length) continue;
    kept.push_back(b);
    current_start = b.frame;
  }
  if (!kept.empty() && n - kept.back().frame < params.min_shot_length) kept.pop_back();

  ShotList out;
  out.video_id = frames.video_id;
  out.frame_count = n;
  long start = 0;
  Transition type = Transition::VideoStart;
  for (const auto& b : kept) {
    out.shots.push_back({static_cast<int>(out.shots.size()), start, b.frame - 1, type});
    start = b.frame;
    type = b.type;
  }
  out.shots.push_back({static_cast<int>(out.shots.size()), start, n - 1, type});
  out.accepted = is_accepted(out);
  return out;
}

void validate_shot_list(const ShotList& list, bool require_tiling) {
  const auto fail = [&](const std::string& m) { throw_invalid(list.video_id + ": " + m); };
  if (require_tiling && list.shots.empty()) fail("no shots");
  long next = 0;
  int previous_id = -1;
  for (std::size_t i = 0; i < list.shots.size(); ++i) {
    const Shot& s = list.shots[i];
    if (s.start > s.end) fail("shot " + std::to_string(s.id) + " has start > end");
    if (s.id <= previous_id) fail("shot ids must increase");
    if (i > 0 && s.start < next) fail("shot " + std::to_string(s.id) + " overlaps its predecessor");
    if (require_tiling && s.start != next) fail("gap before shot " + std::to_string(s.id));
    if (s.end >= list.frame_count) fail("shot " + std::to_string(s.id) + " ends past frame_count");
    if (require_tiling && (i == 0) != (s.transition_in == Transition::VideoStart))
      fail("only the first shot may (and must) be tagged video_start");
    next = s.end + 1;
    previous_id = s.id;
  }
  if (require_tiling && next != list.frame_count) fail("shots do not reach frame_count");
}

ShotList ingest_shot_list(const std::filesystem::path& path) {
  const std::string source = path.string();
  const auto records = jsonl::read_file(path);
  if (records.empty()) throw FormatError(source, 0, "empty shot-list file");

  ShotList out;
  {
    jsonl::FieldReader header(records.front(), source);
    out.video_id = header.string("video_id");
    out.frame_count = header.integer("frame_count");
    if (out.frame_count < 1) header.fail("frame_count must be >= 1");
  }
  if (records.size() < 2) throw FormatError(source, records.front().line, "shot list has no shots");

  long next = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    jsonl::FieldReader row(records[i], source);
    if (row.string("video_id") != out.video_id) row.fail("video_id differs from header");
    Shot s;
    s.id = static_cast<int>(i - 1);
    s.start = row.integer("start");
    s.end = row.integer("end");
    const auto tag = row.string("transition_in");
    const auto t = parse_transition(tag);
    if (!t) row.fail("unknown transition tag \"" + tag + "\"");
    s.transition_in = *t;
    if (s.start > s.end) row.fail("start > end");
    if (s.start < next) row.fail("shot overlaps its predecessor");
    if (s.start > next) row.fail("gap before shot (expected start " + std::to_string(next) + ")");
    if (s.end >= out.frame_count) row.fail("shot ends past frame_count");
    if ((i == 1) != (s.transition_in == Transition::VideoStart))
      row.fail("only the first shot may (and must) be tagged video_start");
    next = s.end + 1;
    out.shots.push_back(s);
  }
  if (next != out.frame_count)
    throw FormatError(source, records.back().line, "shots end at frame " + std::to_string(next - 1) +
                                                      " but frame_count is " + std::to_string(out.frame_count));
  out.accepted = is_accepted(out);
  return out;
}

void write_shot_list(const std::filesystem::path& path, const ShotList& list) {
  std::vector<jsonl::Json> lines;
  lines.push_back({{"video_id", list.video_id}, {"frame_count", list.frame_count}});
  for (const auto& s : list.shots)
    lines.push_back({{"video_id", list.video_id},
                     {"start", s.start},
                     {"end", s.end},
                     {"transition_in", std::string(to_string(s.transition_in))}});
  jsonl::write_file(path, lines);
}

ShotList apply_filters(const ShotList& list) {
  ShotList out = list;
  std::erase_if(out.shots, [](const Shot& s) { return s.transition_in == Transition::Gradual; });
  out.accepted = is_accepted(out);
  return out;
}

}  // namespace pseudocam
