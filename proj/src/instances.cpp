#include "pseudocam/instances.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pseudocam/error.hpp"
#include "pseudocam/jsonl.hpp"

namespace pseudocam {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::MostSimilar: return "most_similar";
    case Strategy::Random: return "random";
    case Strategy::Top5NoCluster: return "top5_no_cluster";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "most_similar") return Strategy::MostSimilar;
  if (text == "random") return Strategy::Random;
  if (text == "top5_no_cluster") return Strategy::Top5NoCluster;
  return std::nullopt;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw_invalid("cosine_sim on vectors of dimension " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  return dot(a, b);
}

namespace {

const ShotFeatures& features_of(const ShotFeatureSet& feats, int shot_id) {
  auto it = feats.find(shot_id);
  if (it == feats.end()) throw_invalid("no features for shot " + std::to_string(shot_id));
  return it->second;
}

}  // namespace

std::optional<std::vector<Candidate>> select_candidates(const Shot& anchor, const Shot& gt, const ShotList& shots,
                                                        const CameraAssignment& assign, const ShotFeatureSet& feats,
                                                        Strategy strategy, Rng& rng) {
  const int k = assign.k;
  const auto& anchor_last = features_of(feats, anchor.id).last_frame;
  const auto similarity = [&](const Shot& s) { return cosine_sim(anchor_last, features_of(feats, s.id).first_frame); };

  std::vector<const Shot*> eligible;
  for (const auto& s : shots.shots)
    if (s.id != anchor.id && s.id != gt.id) eligible.push_back(&s);

  std::vector<Candidate> out;
  if (strategy == Strategy::Top5NoCluster) {
    const auto needed = static_cast<std::size_t>(k - 1);
    if (eligible.size() < needed) return std::nullopt;
    std::vector<std::pair<double, const Shot*>> ranked;
    for (const Shot* s : eligible) ranked.emplace_back(similarity(*s), s);
    const auto by_similarity = [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second->id < b.second->id;
    };
    std::stable_sort(ranked.begin(), ranked.end(), by_similarity);
    ranked.resize(needed);
    ranked.emplace_back(similarity(gt), &gt);
    std::stable_sort(ranked.begin(), ranked.end(), by_similarity);
    for (std::size_t r = 0; r < ranked.size(); ++r)
      out.push_back({ranked[r].second->id, static_cast<int>(r), ranked[r].second->start});
    return out;
  }

  const int gt_camera = assign.camera(gt.id);
  std::vector<std::vector<const Shot*>> by_camera(static_cast<std::size_t>(k));
  for (const Shot* s : eligible) by_camera[static_cast<std::size_t>(assign.camera(s->id))].push_back(s);

  for (int c = 0; c < k; ++c) {
    if (c == gt_camera) {
      out.push_back({gt.id, c, gt.start});
      continue;
    }
    const auto& members = by_camera[static_cast<std::size_t>(c)];
    if (members.empty()) return std::nullopt;
    const Shot* pick = nullptr;
    if (strategy == Strategy::Random) {
      pick = members[rng.uniform_index(members.size())];
    } else {
      double best = -std::numeric_limits<double>::infinity();
      for (const Shot* s : members) {  // members are in id order, so ties keep the lowest id
        const double sim = similarity(*s);
        if (sim > best) {
          best = sim;
          pick = s;
        }
      }
    }
    out.push_back({pick->id, c, pick->start});
  }
  return out;
}

std::vector<long> past_frame_indices(const Shot& anchor) {
  std::vector<long> frames(kPastFrames);
  for (std::size_t i = 0; i < kPastFrames; ++i)
    frames[i] = std::max(anchor.start, anchor.end - static_cast<long>(i) * kPastStride);
  return frames;
}

std::vector<PseudoInstance> build_instances(const ShotList& retained, const ShotFeatureSet& feats,
                                            const CameraAssignment& assign, const BuildConfig& cfg) {
  if (cfg.gap_max < 1) throw_invalid("gap_max must be >= 1");
  Rng rng(derive_seed(cfg.seed, retained.video_id));
  std::vector<PseudoInstance> out;
  for (std::size_t i = 0; i + 1 < retained.shots.size(); ++i) {
    const Shot& anchor = retained.shots[i];
    const Shot& gt = retained.shots[i + 1];
    if (gt.transition_in != Transition::Hard || gt.start != anchor.end + 1) continue;

    const long gap = rng.uniform_int(1, cfg.gap_max);
    // the switch point stays inside the ground-truth shot
    const long t = std::min(gt.start + gap - 1, gt.end);

    auto candidates = select_candidates(anchor, gt, retained, assign, feats, cfg.strategy, rng);
    if (!candidates) continue;

    PseudoInstance inst;
    inst.video_id = retained.video_id;
    inst.anchor_shot = anchor.id;
    inst.switch_frame = t;
    inst.past_frames = past_frame_indices(anchor);
    for (long f : inst.past_frames) inst.past_offsets.push_back(t - f);
    inst.candidates = std::move(*candidates);
    for (std::size_t c = 0; c < inst.candidates.size(); ++c)
      if (inst.candidates[c].shot_id == gt.id) inst.gt_index = static_cast<int>(c);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<std::string> instance_violations(const PseudoInstance& inst, int k) {
  std::vector<std::string> v;
  if (inst.candidates.size() != static_cast<std::size_t>(k))
    v.push_back("expected " + std::to_string(k) + " candidates, found " + std::to_string(inst.candidates.size()));
  for (std::size_t c = 0; c < inst.candidates.size(); ++c) {
    if (inst.candidates[c].camera_id != static_cast<int>(c)) v.push_back("candidate camera ids are not 0..k-1 in order");
    if (inst.candidates[c].shot_id == inst.anchor_shot) v.push_back("anchor shot appears among candidates");
  }
  std::set<int> ids;
  for (const auto& c : inst.candidates) ids.insert(c.shot_id);
  if (ids.size() != inst.candidates.size()) v.push_back("duplicate candidate shots");
  if (inst.gt_index < 0 || inst.gt_index >= static_cast<int>(inst.candidates.size())) {
    v.push_back("gt_index out of range");
  } else if (inst.candidates[static_cast<std::size_t>(inst.gt_index)].shot_id != inst.anchor_shot + 1) {
    v.push_back("ground-truth candidate is not the anchor's successor");
  }
  if (inst.past_frames.size() != kPastFrames || inst.past_offsets.size() != kPastFrames) {
    v.push_back("expected 16 past frames and offsets");
    return v;
  }
  for (std::size_t i = 0; i < kPastFrames; ++i) {
    if (inst.past_offsets[i] != inst.switch_frame - inst.past_frames[i]) v.push_back("past offset != switch_frame - frame");
    if (inst.past_offsets[i] < 1) v.push_back("past offset < 1");
    if (inst.past_offsets[i] < inst.past_offsets[0]) v.push_back("past offset below the most recent frame's offset");
    if (i > 0 && inst.past_offsets[i] < inst.past_offsets[i - 1]) v.push_back("past offsets increase toward the most recent frame");
  }
  return v;
}

std::vector<std::string> instance_violations(const PseudoInstance& inst, int k, const ShotList& all_shots) {
  auto v = instance_violations(inst, k);
  if (inst.video_id != all_shots.video_id) v.push_back("instance belongs to a different video");
  const auto check_shot = [&](int id, const char* role) -> const Shot* {
    const Shot* s = all_shots.find(id);
    if (!s) {
      v.push_back(std::string(role) + " shot " + std::to_string(id) + " does not exist");
      return nullptr;
    }
    if (s->transition_in == Transition::Gradual)
      v.push_back(std::string(role) + " shot " + std::to_string(id) + " entered through a gradual transition");
    return s;
  };
  if (const Shot* anchor = check_shot(inst.anchor_shot, "anchor")) {
    for (long f : inst.past_frames)
      if (f < anchor->start || f > anchor->end) v.push_back("past frame outside the anchor shot");
    if (!inst.past_frames.empty() && inst.past_frames.front() != anchor->end)
      v.push_back("most recent past frame is not the anchor's last frame");
  }
  for (const auto& c : inst.candidates)
    if (const Shot* s = check_shot(c.shot_id, "candidate"); s && s->start != c.frame)
      v.push_back("candidate frame is not its shot's first frame");
  return v;
}

namespace {

jsonl::Json instance_to_json(const PseudoInstance& inst) {
  jsonl::Json candidates = jsonl::Json::array();
  for (const auto& c : inst.candidates)
    candidates.push_back({{"shot_id", c.shot_id}, {"camera_id", c.camera_id}, {"frame", c.frame}});
  return {{"video_id", inst.video_id},         {"anchor_shot", inst.anchor_shot}, {"switch_frame", inst.switch_frame},
          {"past_frames", inst.past_frames},   {"past_offsets", inst.past_offsets}, {"candidates", candidates},
          {"gt_index", inst.gt_index}};
}

jsonl::Json header_to_json(const DatasetHeader& h) {
  return {{"strategy", std::string(to_string(h.strategy))}, {"k", h.k}, {"seed", h.seed}, {"gap_max", h.gap_max}};
}

std::vector<jsonl::Json> dataset_lines(const Dataset& dataset) {
  std::vector<jsonl::Json> lines;
  lines.reserve(dataset.instances.size() + 1);
  lines.push_back(header_to_json(dataset.header));
  for (const auto& inst : dataset.instances) lines.push_back(instance_to_json(inst));
  return lines;
}

std::vector<long> to_longs(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  jsonl::write_file(path, dataset_lines(dataset));
}

std::string dataset_to_text(const Dataset& dataset) { return jsonl::to_text(dataset_lines(dataset)); }

Dataset read_dataset(const std::filesystem::path& path) {
  const std::string source = path.string();
  const auto records = jsonl::read_file(path);
  if (records.empty()) throw FormatError(source, 0, "empty dataset file");

  Dataset out;
  {
    jsonl::FieldReader header(records.front(), source);
    const auto name = header.string("strategy");
    const auto strategy = parse_strategy(name);
    if (!strategy) header.fail("unknown strategy \"" + name + "\"");
    out.header.strategy = *strategy;
    out.header.k = static_cast<int>(header.integer("k"));
    if (out.header.k < 2) header.fail("k must be >= 2");
    const auto& seed = records.front().value.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      header.fail("seed must be a non-negative integer");
    out.header.seed = seed.get<std::uint64_t>();
    out.header.gap_max = header.has("gap_max") ? static_cast<int>(header.integer("gap_max")) : 1;
  }

  for (std::size_t i = 1; i < records.size(); ++i) {
    jsonl::FieldReader row(records[i], source);
    PseudoInstance inst;
    inst.video_id = row.string("video_id");
    inst.anchor_shot = static_cast<int>(row.integer("anchor_shot"));
    inst.switch_frame = row.integer("switch_frame");
    inst.past_frames = to_longs(row.integers("past_frames"));
    inst.past_offsets = to_longs(row.integers("past_offsets"));
    inst.gt_index = static_cast<int>(row.integer("gt_index"));
    for (const auto& c : row.array("candidates")) {
      jsonl::Record sub{records[i].line, c};
      jsonl::FieldReader cr(sub, source);
      inst.candidates.push_back({static_cast<int>(cr.integer("shot_id")), static_cast<int>(cr.integer("camera_id")),
                                 cr.integer("frame")});
    }
    const auto problems = instance_violations(inst, out.header.k);
    if (!problems.empty()) row.fail("invalid instance: " + problems.front());
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace pseudocam
