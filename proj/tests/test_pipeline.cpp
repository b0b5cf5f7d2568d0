#include <doctest.h>

#include <omp.h>

#include "pseudocam/error.hpp"
#include "pseudocam/pipeline.hpp"
#include "pseudocam/synthetic.hpp"
#include "support.hpp"

using namespace pseudocam;

namespace {

std::vector<VideoInput> corpus_inputs(int videos, int shots) {
  SyntheticSpec spec;
  spec.n_shots = shots;
  std::vector<VideoInput> out;
  for (auto& v : generate_corpus(spec, videos)) out.push_back({std::move(v.frames), std::move(v.shots), std::nullopt});
  return out;
}

}  // namespace

TEST_CASE("output does not depend on thread count or input order") {
  auto inputs = corpus_inputs(6, 30);
  PipelineConfig cfg;
  cfg.strategy = Strategy::Random;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = build_dataset(inputs, cfg);
  omp_set_num_threads(4);
  std::reverse(inputs.begin(), inputs.end());
  const auto four = build_dataset(inputs, cfg);
  omp_set_num_threads(saved);
  CHECK(dataset_to_text(one.dataset) == dataset_to_text(four.dataset));
  REQUIRE(one.videos.size() == 6);
  CHECK(one.videos.front().video_id == "synthetic_000");
}

TEST_CASE("videos with nine hard transitions are rejected, ten accepted") {
  auto nine = corpus_inputs(1, 10);
  auto ten = corpus_inputs(1, 11);
  PipelineConfig cfg;
  cfg.k = 2;
  const auto r9 = process_video(nine[0], cfg);
  const auto r10 = process_video(ten[0], cfg);
  CHECK_FALSE(r9.accepted);
  CHECK(r9.instances.empty());
  CHECK_FALSE(r9.assignment);
  CHECK(r10.accepted);
  CHECK_FALSE(r10.instances.empty());
}

TEST_CASE("gradual shots are dropped before clustering") {
  auto inputs = corpus_inputs(1, 40);
  auto& shots = inputs[0].shots.shots;
  shots[5].transition_in = Transition::Gradual;
  shots[17].transition_in = Transition::Gradual;
  const auto out = process_video(inputs[0], PipelineConfig{});
  REQUIRE(out.accepted);
  CHECK(out.assignment->camera_of.count(5) == 0);
  CHECK(out.assignment->camera_of.count(17) == 0);
  for (const auto& inst : out.instances) CHECK(instance_violations(inst, 6, inputs[0].shots).empty());
  CHECK(out.candidate_pairs == 39 - 4);
}

TEST_CASE("mismatched inputs are rejected") {
  auto inputs = corpus_inputs(2, 12);
  inputs[1].shots.video_id = inputs[0].shots.video_id;
  inputs[1].frames.video_id = inputs[0].frames.video_id;
  CHECK_THROWS_AS(build_dataset(inputs, PipelineConfig{}), Error);

  auto one = corpus_inputs(1, 12);
  one[0].frames.video_id = "other";
  CHECK_THROWS_AS(process_video(one[0], PipelineConfig{}), Error);
}
