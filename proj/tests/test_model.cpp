#include <doctest.h>

#include <cmath>

#include "pseudocam/error.hpp"
#include "pseudocam/model.hpp"
#include "support.hpp"

using namespace pseudocam;
using testing::TempDir;

namespace {

const ModelDims kSmall{8, 8, 32, 6, 1};

Matrix unit_rows(std::initializer_list<Vector> rows) {
  std::vector<Vector> vs;
  for (const auto& r : rows) vs.push_back(normalize(r));
  return testing::rows_to_matrix(vs);
}

}  // namespace

TEST_CASE("positional_embedding") {
  CHECK(positional_embedding(0, 4) == Vector{0, 1, 0, 1});
  const auto pe = positional_embedding(28, 4);
  CHECK(pe[0] == doctest::Approx(0.2709).epsilon(1e-3));
  CHECK(pe[1] == doctest::Approx(-0.9626).epsilon(1e-3));
  CHECK(pe[2] == doctest::Approx(0.2764).epsilon(1e-3));
  CHECK(pe[3] == doctest::Approx(0.9611).epsilon(1e-3));
  CHECK(pe[0] == std::sin(28.0));
  CHECK(pe[3] == std::cos(0.28));
  for (long offset : {0L, 1L, 7L, 1000L, 123456L})
    for (double v : positional_embedding(offset, 64)) CHECK(std::abs(v) <= 1.0);
  CHECK_THROWS_AS(positional_embedding(3, 5), Error);
}

TEST_CASE("encode_frame") {
  ModelDims dims{4, 4, 16, 6, 1};
  auto p = ModelParams::initialize(dims, 0.07, 0);
  const Vector f{0.5, 0.5, 0.5, 0.5};

  SUBCASE("zero projection gives the positional embedding") {
    p.w_in.set_zero();
    CHECK(encode_frame(f, 28, p) == positional_embedding(28, 4));
  }
  SUBCASE("identity projection at offset 0") {
    p.w_in.set_zero();
    for (std::size_t i = 0; i < 4; ++i) p.w_in(i, i) = 1.0;
    CHECK(encode_frame(f, 0, p) == Vector{0.5, 1.5, 0.5, 1.5});
  }
  SUBCASE("affine in the feature") {
    const Vector f1{1, 2, 3, 4}, f2{-1, 0.5, 2, 0};
    const double a = 0.3, b = -1.7;
    Vector mix(4);
    for (int i = 0; i < 4; ++i) mix[i] = a * f1[i] + b * f2[i];
    const auto pe = positional_embedding(9, 4);
    const auto e1 = encode_frame(f1, 9, p), e2 = encode_frame(f2, 9, p), em = encode_frame(mix, 9, p);
    for (int i = 0; i < 4; ++i)
      CHECK(em[i] - pe[i] == doctest::Approx(a * (e1[i] - pe[i]) + b * (e2[i] - pe[i])).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(encode_frame(Vector{1, 0, 0}, 0, p), Error);
  }
}

TEST_CASE("encode_past") {
  Rng rng(4);
  const auto p = testing::perturbed_params({8, 8, 32, 6, 1}, 0.07, 1);
  Matrix inputs(16, 8);
  for (auto& x : inputs.data) x = rng.normal();
  const auto enc = encode_past(inputs, p);
  CHECK(l2_norm(enc.past_feature) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(enc.attention.size() == 1);
  for (std::size_t r = 0; r < enc.attention[0].rows; ++r) {
    double sum = 0;
    for (double v : enc.attention[0].row(r)) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }

  Matrix permuted(16, 8);
  for (std::size_t r = 0; r < 16; ++r)
    std::copy(inputs.row(15 - r).begin(), inputs.row(15 - r).end(), permuted.row(r).begin());
  CHECK(encode_past(permuted, p).past_feature != enc.past_feature);

  Matrix same(16, 8);
  for (std::size_t r = 0; r < 16; ++r) std::copy(inputs.row(0).begin(), inputs.row(0).end(), same.row(r).begin());
  const auto a = encode_past(same, p).past_feature;
  const auto b = encode_past(same, p).past_feature;
  CHECK(a == b);

  CHECK_THROWS_AS(encode_past(Matrix(15, 8), p), Error);

  const auto deep = testing::perturbed_params({8, 8, 32, 6, 3}, 0.07, 1);
  const auto deep_enc = encode_past(inputs, deep);
  CHECK(deep_enc.attention.size() == 3);
  CHECK(l2_norm(deep_enc.past_feature) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("info_nce closed forms") {
  const auto past = normalize(Vector{1, 0, 0, 0, 0, 0, 0});

  SUBCASE("uniform similarities give ln 6") {
    Matrix c(6, 7);
    for (int j = 0; j < 6; ++j) c(j, j + 1) = 1.0;
    const auto r = info_nce(past, c, 2, 0.07);
    CHECK(std::abs(r.loss - std::log(6.0)) < 1e-9);
    for (double p : r.probs) CHECK(std::abs(p - 1.0 / 6) < 1e-12);
  }
  SUBCASE("tau 1 with one aligned candidate") {
    Matrix c(6, 7);
    c(0, 0) = 1.0;
    for (int j = 1; j < 6; ++j) c(j, j) = 1.0;
    const auto r = info_nce(past, c, 0, 1.0);
    CHECK(r.loss == doctest::Approx(std::log(1.0 + 5.0 / std::exp(1.0))).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(1.0436).epsilon(1e-4));
  }
  SUBCASE("wide margin gives a vanishing loss") {
    Matrix c(6, 7);
    c(0, 0) = 1.0;
    for (int j = 1; j < 6; ++j) c(j, 0) = -1.0;
    CHECK(info_nce(past, c, 0, 0.07).loss < 1e-9);
  }
  SUBCASE("score gradient is (probs - onehot) / tau") {
    const Vector s{0.3, -0.1, 0.8, 0.05, -0.6, 0.2};
    for (double tau : {0.07, 0.5, 1.0}) {
      const int gt = 3;
      const auto r = info_nce_from_scores(s, gt, tau);
      for (int j = 0; j < 6; ++j) {
        auto up = s, down = s;
        const double h = 1e-6;
        up[j] += h;
        down[j] -= h;
        const double numeric =
            (info_nce_from_scores(up, gt, tau).loss - info_nce_from_scores(down, gt, tau).loss) / (2 * h);
        const double closed = (r.probs[j] - (j == gt ? 1.0 : 0.0)) / tau;
        CHECK(std::abs(numeric - closed) < 1e-8);
      }
    }
  }
  SUBCASE("probabilities sum to one and ignore a common shift") {
    const Vector s{0.3, -0.1, 0.8, 0.05, -0.6, 0.2};
    Vector shifted = s;
    for (auto& x : shifted) x += 0.37;
    const auto a = info_nce_from_scores(s, 1, 0.07);
    const auto b = info_nce_from_scores(shifted, 1, 0.07);
    double sum = 0;
    for (int j = 0; j < 6; ++j) {
      sum += a.probs[j];
      CHECK(std::abs(a.probs[j] - b.probs[j]) < 1e-9);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(a.loss >= 0.0);
  }
  SUBCASE("non-unit inputs are rejected") {
    Matrix c(6, 7);
    for (int j = 0; j < 6; ++j) c(j, j + 1) = 1.0;
    CHECK_THROWS_AS(info_nce(Vector{2, 0, 0, 0, 0, 0, 0}, c, 0, 0.07), Error);
    c(0, 1) = 1.01;
    CHECK_THROWS_AS(info_nce(past, c, 0, 0.07), Error);
  }
}

TEST_CASE("predict") {
  const auto past = normalize(Vector{1, 2, 3});
  auto c = unit_rows({{1, 0, 0}, {0, 1, 0}, {1, 2, 3}, {0, 0, 1}, {3, 2, 1}, {-1, -2, -3}});
  CHECK(predict(past, c) == 2);
  CHECK(argmax_index(Vector{0.1, 0.5, 0.9, 0.2, 0.9, 0.0}) == 2);
  CHECK(argmax_index(Vector{-0.2, 0.9, 0.1, 0, 0, 0}) == 1);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector s(6);
    for (auto& x : s) x = rng.normal();
    Vector t = s;
    for (auto& x : t) x = std::exp(3 * x) + 2;
    CHECK(argmax_index(s) == argmax_index(t));
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(2024);
  for (int layers : {1, 2}) {
    ModelDims dims = kSmall;
    dims.layers = layers;
    for (int instance = 0; instance < 3; ++instance) {
      const auto p = testing::perturbed_params(dims, 0.07, 10 + instance);
      const auto input = testing::random_input(rng, dims.d_f, dims.k);
      const auto r = testing::check_gradients(input, p, rng, 20);
      INFO("layers " << layers << " worst tensor " << r.worst_tensor);
      CHECK(r.worst_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("gradients vanish at the loss minimum") {
  auto p = ModelParams::initialize(kSmall, 0.07, 0);
  Rng rng(5);
  auto input = testing::random_input(rng, 8, 6);
  // A tiny temperature saturates the softmax on the predicted candidate.
  p.tau = 1e-4;
  const auto fwd = forward(input, p);
  input.gt_index = fwd.prediction;
  auto grads = p.zeros_like();
  const double loss = backward(input, p, grads);
  CHECK(loss < 1e-12);
  double max_grad = 0;
  for (const auto& t : grads.tensors())
    for (double v : t.values) max_grad = std::max(max_grad, std::abs(v));
  CHECK(max_grad < 1e-8);
}

TEST_CASE("backward returns the forward loss") {
  Rng rng(8);
  const auto p = testing::perturbed_params(kSmall, 0.07, 3);
  const auto input = testing::random_input(rng, 8, 6);
  auto grads = p.zeros_like();
  CHECK(backward(input, p, grads) == doctest::Approx(forward(input, p).nce.loss).epsilon(1e-12));
}

TEST_CASE("parallel batch gradient is bit-identical to the serial reference") {
  Rng rng(99);
  const auto p = testing::perturbed_params({16, 16, 64, 6, 1}, 0.07, 4);
  std::vector<ModelInput> batch;
  for (int i = 0; i < 37; ++i) batch.push_back(testing::random_input(rng, 16, 6));
  const auto par = batch_gradient(batch, p);
  const auto ser = batch_gradient_serial(batch, p);
  CHECK(par.mean_loss == ser.mean_loss);
  CHECK(par.losses == ser.losses);
  CHECK(par.grads == ser.grads);
}

TEST_CASE("checkpoint round trip and validation") {
  TempDir dir;
  const auto p = testing::perturbed_params({8, 8, 32, 6, 2}, 0.1, 17);
  save_checkpoint(dir / "m.ckpt", p);
  const auto back = load_checkpoint(dir / "m.ckpt");
  CHECK(back == p);
  CHECK(back.tau == 0.1);
  CHECK(back.seed == 17);

  const auto bytes = testing::read_text(dir / "m.ckpt");
  testing::write_text(dir / "short.ckpt", bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), FormatError);
  testing::write_text(dir / "junk.ckpt", "not a checkpoint\n");
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), FormatError);
  try {
    load_checkpoint(dir / "missing.ckpt");
    FAIL("expected MissingArtifact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
  }
}

TEST_CASE("initialisation") {
  const auto p = ModelParams::initialize({8, 8, 32, 6, 1}, 0.07, 0);
  CHECK(p == ModelParams::initialize({8, 8, 32, 6, 1}, 0.07, 0));
  CHECK_FALSE(p == ModelParams::initialize({8, 8, 32, 6, 1}, 0.07, 1));
  for (double v : p.latent) CHECK(v == 0.0);
  for (double v : p.blocks[0].ln1_scale) CHECK(v == 1.0);
  for (double v : p.blocks[0].ln2_shift) CHECK(v == 0.0);
  const double bound = 1.0 / std::sqrt(8.0);
  for (double v : p.w_in.data) CHECK(std::abs(v) <= bound);
  for (double v : p.blocks[0].w2.data) CHECK(std::abs(v) <= 1.0 / std::sqrt(32.0));
}
