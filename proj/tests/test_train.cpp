#include <doctest.h>

#include <cmath>
#include <set>

#include "pseudocam/error.hpp"
#include "pseudocam/train.hpp"
#include "support.hpp"

using namespace pseudocam;

namespace {

/// The ground-truth candidate is the normalised mean of the past frames;
/// the rest are random unit vectors.
std::vector<Example> separable(std::size_t n, std::size_t d_f, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex{"v" + std::to_string(i % 10), testing::random_input(rng, d_f, 6)};
    Vector mean(d_f, 0.0);
    for (std::size_t r = 0; r < kPastFrames; ++r) axpy(1.0, ex.input.past.row(r), mean);
    const auto m = normalize(mean);
    std::copy(m.begin(), m.end(), ex.input.candidates.row(static_cast<std::size_t>(ex.input.gt_index)).begin());
    out.push_back(std::move(ex));
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.d_model = 16;
  cfg.d_hidden = 64;
  cfg.epochs = 3;
  return cfg;
}

PseudoInstance instance_for(const std::string& video) {
  PseudoInstance inst;
  inst.video_id = video;
  return inst;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto data = separable(24, 8, 1);
  auto cfg = small_config();
  cfg.lr = 0.0;
  for (auto opt : {Optimizer::Adam, Optimizer::Sgd}) {
    cfg.optimizer = opt;
    const auto r = train(data, cfg, 5);
    ModelDims dims{8, cfg.d_model, cfg.d_hidden, 6, cfg.layers};
    CHECK(r.params == ModelParams::initialize(dims, cfg.tau, 5));
    REQUIRE(r.loss_history.size() == 3);
    CHECK(r.loss_history[0] == r.loss_history[1]);
    CHECK(r.loss_history[1] == r.loss_history[2]);
  }
}

TEST_CASE("training is deterministic for a seed") {
  const auto data = separable(40, 8, 2);
  const auto cfg = small_config();
  const auto a = train(data, cfg, 3);
  const auto b = train(data, cfg, 3);
  CHECK(a.params == b.params);
  CHECK(a.loss_history == b.loss_history);
  CHECK_FALSE(train(data, cfg, 4).params == a.params);
}

TEST_CASE("separable instances are learned in 200 steps") {
  const auto data = separable(200, 16, 7);
  TrainConfig cfg;
  cfg.batch_size = 20;
  cfg.epochs = 20;  // 10 steps per epoch
  const auto r = train(data, cfg, 0);
  CHECK(r.loss_history.back() < r.loss_history.front());
  CHECK(evaluate(r.params, data) == 100.0);
}

TEST_CASE("sgd also reduces the loss") {
  const auto data = separable(64, 8, 9);
  auto cfg = small_config();
  cfg.optimizer = Optimizer::Sgd;
  cfg.lr = 0.05;
  cfg.epochs = 5;
  const auto r = train(data, cfg, 1);
  CHECK(r.loss_history.back() < r.loss_history.front());
}

TEST_CASE("training and evaluation reject empty data and bad configs") {
  CHECK_THROWS_AS(train({}, small_config(), 0), Error);
  CHECK_THROWS_AS(evaluate(ModelParams::initialize({8, 8, 32, 6, 1}, 0.07, 0), {}), Error);
  auto cfg = small_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.lr = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.split_ratio = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("evaluate") {
  SUBCASE("single wrong prediction scores zero") {
    auto data = separable(1, 8, 4);
    const auto p = ModelParams::initialize({8, 8, 32, 6, 1}, 0.07, 0);
    data[0].input.gt_index = (forward(data[0].input, p).prediction + 1) % 6;
    CHECK(evaluate(p, data) == 0.0);
  }
  SUBCASE("order of the instances does not matter") {
    auto data = separable(30, 8, 5);
    const auto p = ModelParams::initialize({8, 8, 32, 6, 1}, 0.07, 2);
    const double a = evaluate(p, data);
    std::reverse(data.begin(), data.end());
    CHECK(evaluate(p, data) == a);
  }
  CHECK(accuracy_from_predictions({1, 2, 3, 4}, {1, 2, 0, 4}) == 75.0);
}

TEST_CASE("uniform random baseline over six candidates") {
  const auto data = separable(12000, 4, 11);
  const double acc = random_baseline_accuracy(data, 0);
  CHECK(std::abs(acc - 100.0 / 6) <= 1.0);
}

TEST_CASE("report statistics") {
  CHECK(make_report({30, 30, 30}, 10).summary() == "30.00±0.00");
  const auto r = make_report({28, 30, 32}, 10);
  CHECK(r.mean == doctest::Approx(30.0));
  CHECK(r.std == doctest::Approx(std::sqrt(8.0 / 3)).epsilon(1e-12));
  CHECK(r.summary() == "30.00±1.63");
  CHECK(make_report({42.5}, 3).std == 0.0);
  const auto j = report_to_json(r, TrainConfig{});
  CHECK(j["per_seed"].size() == 3);
  CHECK(j["n_instances"] == 10);
  CHECK(j["config"]["lr"] == 1e-3);
}

TEST_CASE("split_by_video") {
  std::vector<PseudoInstance> instances;
  for (int v = 0; v < 10; ++v)
    for (int i = 0; i <= v; ++i) instances.push_back(instance_for("video" + std::to_string(v)));

  const auto [train_set, test_set] = split_by_video(instances, 0.8, 1);
  std::set<std::string> train_ids, test_ids;
  for (const auto& i : train_set) train_ids.insert(i.video_id);
  for (const auto& i : test_set) test_ids.insert(i.video_id);
  CHECK(train_ids.size() == 8);
  CHECK(test_ids.size() == 2);
  CHECK(train_set.size() + test_set.size() == instances.size());

  const auto again = split_by_video(instances, 0.8, 1);
  CHECK(again.first == train_set);
  CHECK(again.second == test_set);

  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PseudoInstance> xs;
    const auto videos = 2 + rng.uniform_index(20);
    for (int i = 0; i < 60; ++i) xs.push_back(instance_for("v" + std::to_string(rng.uniform_index(videos))));
    std::set<std::string> distinct;
    for (const auto& x : xs) distinct.insert(x.video_id);
    if (distinct.size() < 2) continue;
    const double ratio = 0.1 + 0.8 * rng.uniform();
    const auto [a, b] = split_by_video(xs, ratio, rng.next_u64());
    std::set<std::string> ia, ib;
    for (const auto& x : a) ia.insert(x.video_id);
    for (const auto& x : b) ib.insert(x.video_id);
    for (const auto& id : ia) CHECK(ib.count(id) == 0);
    CHECK_FALSE(ia.empty());
    CHECK_FALSE(ib.empty());
  }

  try {
    split_by_video({instance_for("only"), instance_for("only")}, 0.8, 0);
    FAIL("expected CannotSplit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CannotSplit);
  }
}

TEST_CASE("paper-parity preset") {
  const auto cfg = TrainConfig::paper_parity();
  CHECK(cfg.epochs == 10);
  CHECK(cfg.lr == 1e-5);
  CHECK(cfg.batch_size == 2);
  CHECK(cfg.seeds.size() == 3);
}

TEST_CASE("resolve_examples looks frames up in the store") {
  FeatureStore store;
  std::vector<Vector> rows;
  for (int i = 0; i < 40; ++i) rows.push_back(testing::basis(40, i));
  store.emplace("v", make_frame_sequence("v", rows));
  PseudoInstance inst;
  inst.video_id = "v";
  inst.switch_frame = 20;
  for (int i = 0; i < 16; ++i) {
    inst.past_frames.push_back(std::max(0, 19 - 5 * i));
    inst.past_offsets.push_back(20 - inst.past_frames.back());
  }
  for (int c = 0; c < 6; ++c) inst.candidates.push_back({c, c, 20L + c});
  inst.gt_index = 0;
  Dataset ds{{}, {inst}};
  const auto ex = resolve_examples(ds, store);
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].input.past(0, 19) == 1.0);
  CHECK(ex[0].input.candidates(3, 23) == 1.0);
  CHECK(ex[0].input.offsets == inst.past_offsets);
  inst.video_id = "w";
  CHECK_THROWS_AS(resolve_examples(Dataset{{}, {inst}}, store), Error);
}
