#include "pseudocam/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pseudocam/error.hpp"
#include "pseudocam/features.hpp"
#include "pseudocam/instances.hpp"
#include "pseudocam/rng.hpp"

namespace pseudocam {

namespace {

constexpr double kLayerNormEps = 1e-5;

void fill_uniform(Matrix& m, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols));
  for (double& v : m.data) v = (2.0 * rng.uniform() - 1.0) * bound;
}

}  // namespace

ModelParams ModelParams::initialize(const ModelDims& dims, double tau, std::uint64_t seed) {
  if (dims.d_f < 1) throw_invalid("d_f must be >= 1");
  if (dims.d_model < 2 || dims.d_model % 2 != 0) throw_invalid("d_model must be even and >= 2");
  if (dims.d_hidden < 1) throw_invalid("d_hidden must be >= 1");
  if (dims.layers < 1) throw_invalid("layers must be >= 1");
  if (dims.k < 2) throw_invalid("k must be >= 2");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw_invalid("tau must be > 0");

  const std::size_t d = dims.d_model, h = dims.d_hidden;
  ModelParams p;
  p.dims = dims;
  p.tau = tau;
  p.seed = seed;
  p.w_in = Matrix(d, dims.d_f);
  p.latent = Vector(d, 0.0);
  p.blocks.resize(static_cast<std::size_t>(dims.layers));
  for (auto& b : p.blocks) {
    b.wq = b.wk = b.wv = b.wo = Matrix(d, d);
    b.ln1_scale = b.ln2_scale = Vector(d, 1.0);
    b.ln1_shift = b.ln2_shift = Vector(d, 0.0);
    b.w1 = Matrix(h, d);
    b.w2 = Matrix(d, h);
  }
  p.w_out = Matrix(d, d);

  Rng rng(seed);
  fill_uniform(p.w_in, rng);
  for (auto& b : p.blocks)
    for (Matrix* m : {&b.wq, &b.wk, &b.wv, &b.wo, &b.w1, &b.w2}) fill_uniform(*m, rng);
  fill_uniform(p.w_out, rng);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& t : z.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

std::vector<TensorView> ModelParams::tensors() {
  const auto mat = [](std::string name, Matrix& m) { return TensorView{std::move(name), m.rows, m.cols, m.data}; };
  const auto vec = [](std::string name, Vector& v) { return TensorView{std::move(name), 1, v.size(), v}; };
  std::vector<TensorView> out;
  out.push_back(mat("w_in", w_in));
  out.push_back(vec("latent", latent));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& b = blocks[i];
    const std::string pre = "block" + std::to_string(i) + ".";
    out.push_back(mat(pre + "wq", b.wq));
    out.push_back(mat(pre + "wk", b.wk));
    out.push_back(mat(pre + "wv", b.wv));
    out.push_back(mat(pre + "wo", b.wo));
    out.push_back(vec(pre + "ln1_scale", b.ln1_scale));
    out.push_back(vec(pre + "ln1_shift", b.ln1_shift));
    out.push_back(vec(pre + "ln2_scale", b.ln2_scale));
    out.push_back(vec(pre + "ln2_shift", b.ln2_shift));
    out.push_back(mat(pre + "w1", b.w1));
    out.push_back(mat(pre + "w2", b.w2));
  }
  out.push_back(mat("w_out", w_out));
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : const_cast<ModelParams*>(this)->tensors()) n += t.values.size();
  return n;
}

Vector positional_embedding(long offset, std::size_t d_model) {
  if (d_model < 2 || d_model % 2 != 0) throw_invalid("positional embedding needs an even d_model >= 2");
  Vector pe(d_model);
  for (std::size_t i = 0; i < d_model / 2; ++i) {
    const double angle =
        static_cast<double>(offset) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
    pe[2 * i] = std::sin(angle);
    pe[2 * i + 1] = std::cos(angle);
  }
  return pe;
}

Vector encode_frame(std::span<const double> feature, long offset, const ModelParams& p) {
  if (feature.size() != p.dims.d_f)
    throw_invalid("frame feature has dimension " + std::to_string(feature.size()) + ", model expects " +
                  std::to_string(p.dims.d_f));
  Vector out = positional_embedding(offset, p.dims.d_model);
  Vector projected(p.dims.d_model);
  matvec(p.w_in, feature, projected);
  axpy(1.0, projected, out);
  return out;
}

Vector encode_candidate(std::span<const double> feature, const ModelParams& p) {
  return normalize(encode_frame(feature, 0, p));
}

namespace {

struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;
};

Matrix layer_norm(const Matrix& x, const Vector& scale, const Vector& shift, LayerNormCache& cache) {
  const std::size_t d = x.cols;
  Matrix y(x.rows, d);
  cache.xhat = Matrix(x.rows, d);
  cache.inv_std.assign(x.rows, 0.0);
  for (std::size_t t = 0; t < x.rows; ++t) {
    const auto row = x.row(t);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[t] = inv;
    for (std::size_t i = 0; i < d; ++i) {
      const double xh = (row[i] - mean) * inv;
      cache.xhat(t, i) = xh;
      y(t, i) = scale[i] * xh + shift[i];
    }
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Vector& scale, const LayerNormCache& cache, Vector& dscale,
                           Vector& dshift) {
  const std::size_t d = dy.cols;
  Matrix dx(dy.rows, d);
  Vector dxhat(d);
  for (std::size_t t = 0; t < dy.rows; ++t) {
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dscale[i] += dy(t, i) * cache.xhat(t, i);
      dshift[i] += dy(t, i);
      dxhat[i] = dy(t, i) * scale[i];
      mean_dxhat += dxhat[i];
      mean_dxhat_xhat += dxhat[i] * cache.xhat(t, i);
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i)
      dx(t, i) = cache.inv_std[t] * (dxhat[i] - mean_dxhat - cache.xhat(t, i) * mean_dxhat_xhat);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

struct BlockCache {
  LayerNormCache ln1, ln2;
  Matrix a, q, k, v, probs, heads, s1, b, u, g;
};

Matrix block_forward(const Matrix& s, const AttentionBlock& blk, BlockCache& c) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.cols));
  c.a = layer_norm(s, blk.ln1_scale, blk.ln1_shift, c.ln1);
  c.q = linear_rows(c.a, blk.wq);
  c.k = linear_rows(c.a, blk.wk);
  c.v = linear_rows(c.a, blk.wv);
  c.probs = matmul_transposed(c.q, c.k);
  for (std::size_t t = 0; t < c.probs.rows; ++t) {
    auto row = c.probs.row(t);
    double mx = -std::numeric_limits<double>::infinity();
    for (double& x : row) mx = std::max(mx, x *= scale);
    double z = 0.0;
    for (double& x : row) z += (x = std::exp(x - mx));
    for (double& x : row) x /= z;
  }
  c.heads = matmul(c.probs, c.v);
  c.s1 = linear_rows(c.heads, blk.wo);
  axpy(1.0, s.data, c.s1.data);

  c.b = layer_norm(c.s1, blk.ln2_scale, blk.ln2_shift, c.ln2);
  c.u = linear_rows(c.b, blk.w1);
  c.g = c.u;
  for (double& x : c.g.data) x = gelu(x);
  Matrix out = linear_rows(c.g, blk.w2);
  axpy(1.0, c.s1.data, out.data);
  return out;
}

Matrix block_backward(const Matrix& d_out, const AttentionBlock& blk, const BlockCache& c, AttentionBlock& g) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_out.cols));

  // MLP branch
  Matrix ds1 = d_out;
  linear_rows_weight_grad(d_out, c.g, g.w2);
  Matrix du = linear_rows_input_grad(d_out, blk.w2);
  for (std::size_t i = 0; i < du.data.size(); ++i) du.data[i] *= gelu_derivative(c.u.data[i]);
  linear_rows_weight_grad(du, c.b, g.w1);
  const Matrix db = linear_rows_input_grad(du, blk.w1);
  const Matrix ds1_ln = layer_norm_backward(db, blk.ln2_scale, c.ln2, g.ln2_scale, g.ln2_shift);
  axpy(1.0, ds1_ln.data, ds1.data);

  // attention branch
  Matrix ds = ds1;
  linear_rows_weight_grad(ds1, c.heads, g.wo);
  const Matrix dheads = linear_rows_input_grad(ds1, blk.wo);
  Matrix dprobs = matmul_transposed(dheads, c.v);
  const Matrix dv = matmul_lhs_transposed(c.probs, dheads);
  for (std::size_t t = 0; t < dprobs.rows; ++t) {
    const auto p = c.probs.row(t);
    auto dp = dprobs.row(t);
    const double inner = dot(p, dp);
    for (std::size_t j = 0; j < dp.size(); ++j) dp[j] = p[j] * (dp[j] - inner) * scale;
  }
  const Matrix dq = matmul(dprobs, c.k);
  const Matrix dk = matmul_lhs_transposed(dprobs, c.q);
  linear_rows_weight_grad(dq, c.a, g.wq);
  linear_rows_weight_grad(dk, c.a, g.wk);
  linear_rows_weight_grad(dv, c.a, g.wv);
  Matrix da = linear_rows_input_grad(dq, blk.wq);
  axpy(1.0, linear_rows_input_grad(dk, blk.wk).data, da.data);
  axpy(1.0, linear_rows_input_grad(dv, blk.wv).data, da.data);
  const Matrix ds_ln = layer_norm_backward(da, blk.ln1_scale, c.ln1, g.ln1_scale, g.ln1_shift);
  axpy(1.0, ds_ln.data, ds.data);
  return ds;
}

Matrix input_sequence(const Matrix& inputs, const ModelParams& p) {
  if (inputs.rows != kPastFrames)
    throw_invalid("past encoder expects " + std::to_string(kPastFrames) + " inputs, got " + std::to_string(inputs.rows));
  if (inputs.cols != p.dims.d_model) throw_invalid("encoded past inputs must have dimension d_model");
  Matrix s(inputs.rows + 1, p.dims.d_model);
  std::copy(p.latent.begin(), p.latent.end(), s.row(0).begin());
  std::copy(inputs.data.begin(), inputs.data.end(), s.data.begin() + static_cast<std::ptrdiff_t>(p.dims.d_model));
  return s;
}

struct PastCache {
  std::vector<BlockCache> blocks;
  Vector latent_out;  // final row 0
  Vector projected;   // W_out * latent_out
  double projected_norm = 0.0;
  Vector past_feature;
};

void past_forward(const Matrix& inputs, const ModelParams& p, PastCache& cache) {
  Matrix s = input_sequence(inputs, p);
  cache.blocks.resize(p.blocks.size());
  for (std::size_t i = 0; i < p.blocks.size(); ++i) s = block_forward(s, p.blocks[i], cache.blocks[i]);
  cache.latent_out.assign(s.row(0).begin(), s.row(0).end());
  cache.projected.assign(p.dims.d_model, 0.0);
  matvec(p.w_out, cache.latent_out, cache.projected);
  cache.projected_norm = l2_norm(cache.projected);
  cache.past_feature = normalize(cache.projected);
}

/// Gradient of y = x / ||x|| pulled back to x.
Vector normalize_backward(const Vector& y, double norm, std::span<const double> dy) {
  const double inner = dot(y, dy);
  Vector dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = (dy[i] - y[i] * inner) / norm;
  return dx;
}

void check_input(const ModelInput& input, const ModelParams& p) {
  if (input.past.rows != kPastFrames || input.offsets.size() != kPastFrames)
    throw_invalid("instance must carry " + std::to_string(kPastFrames) + " past frames");
  if (input.past.cols != p.dims.d_f || input.candidates.cols != p.dims.d_f)
    throw_invalid("instance feature dimension does not match the model's d_f");
  if (input.candidates.rows < 1) throw_invalid("instance has no candidates");
  if (input.gt_index < 0 || static_cast<std::size_t>(input.gt_index) >= input.candidates.rows)
    throw_invalid("gt_index out of range");
}

Matrix encode_past_inputs(const ModelInput& input, const ModelParams& p) {
  Matrix x(kPastFrames, p.dims.d_model);
  for (std::size_t i = 0; i < kPastFrames; ++i) {
    const auto e = encode_frame(input.past.row(i), input.offsets[i], p);
    std::copy(e.begin(), e.end(), x.row(i).begin());
  }
  return x;
}

}  // namespace

PastEncoding encode_past(const Matrix& inputs, const ModelParams& p) {
  PastCache cache;
  past_forward(inputs, p, cache);
  PastEncoding out;
  out.past_feature = cache.past_feature;
  for (const auto& b : cache.blocks) out.attention.push_back(b.probs);
  return out;
}

InfoNceResult info_nce_from_scores(std::span<const double> scores, int gt_index, double tau) {
  if (!(tau > 0.0)) throw_invalid("tau must be > 0");
  if (gt_index < 0 || static_cast<std::size_t>(gt_index) >= scores.size()) throw_invalid("gt_index out of range");
  const double mx = *std::max_element(scores.begin(), scores.end());
  InfoNceResult out;
  out.probs.resize(scores.size());
  double z = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) z += (out.probs[j] = std::exp((scores[j] - mx) / tau));
  for (double& v : out.probs) v /= z;
  // -log softmax computed in log space so tiny probabilities do not underflow
  out.loss = std::log(z) - (scores[static_cast<std::size_t>(gt_index)] - mx) / tau;
  out.loss = std::max(out.loss, 0.0);
  return out;
}

InfoNceResult info_nce(std::span<const double> past, const Matrix& candidates, int gt_index, double tau) {
  constexpr double kUnitTolerance = 1e-4;
  if (std::abs(l2_norm(past) - 1.0) > kUnitTolerance) throw_invalid("past feature is not unit-norm");
  if (past.size() != candidates.cols) throw_invalid("past feature and candidates differ in dimension");
  Vector scores(candidates.rows);
  for (std::size_t j = 0; j < candidates.rows; ++j) {
    if (std::abs(l2_norm(candidates.row(j)) - 1.0) > kUnitTolerance)
      throw_invalid("candidate " + std::to_string(j) + " is not unit-norm");
    scores[j] = dot(past, candidates.row(j));
  }
  return info_nce_from_scores(scores, gt_index, tau);
}

int argmax_index(std::span<const double> scores) {
  int best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j)
    if (scores[j] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

int predict(std::span<const double> past, const Matrix& candidates) {
  Vector scores(candidates.rows);
  for (std::size_t j = 0; j < candidates.rows; ++j) scores[j] = dot(past, candidates.row(j));
  return argmax_index(scores);
}

ForwardResult forward(const ModelInput& input, const ModelParams& p) {
  check_input(input, p);
  PastCache cache;
  past_forward(encode_past_inputs(input, p), p, cache);
  ForwardResult out;
  out.past_feature = cache.past_feature;
  out.candidate_vecs = Matrix(input.candidates.rows, p.dims.d_model);
  out.scores.resize(input.candidates.rows);
  for (std::size_t j = 0; j < input.candidates.rows; ++j) {
    const auto c = encode_candidate(input.candidates.row(j), p);
    std::copy(c.begin(), c.end(), out.candidate_vecs.row(j).begin());
    out.scores[j] = dot(out.past_feature, c);
  }
  out.nce = info_nce_from_scores(out.scores, input.gt_index, p.tau);
  out.prediction = argmax_index(out.scores);
  return out;
}

double backward(const ModelInput& input, const ModelParams& p, ModelParams& grads) {
  check_input(input, p);
  const std::size_t d = p.dims.d_model;
  const std::size_t k = input.candidates.rows;

  const Matrix x = encode_past_inputs(input, p);
  PastCache cache;
  past_forward(x, p, cache);

  const Vector pe0 = positional_embedding(0, d);
  std::vector<Vector> cand_raw(k), cand(k);
  Vector scores(k);
  for (std::size_t j = 0; j < k; ++j) {
    cand_raw[j] = Vector(d);
    matvec(p.w_in, input.candidates.row(j), cand_raw[j]);
    axpy(1.0, pe0, cand_raw[j]);
    cand[j] = normalize(cand_raw[j]);
    scores[j] = dot(cache.past_feature, cand[j]);
  }
  const auto nce = info_nce_from_scores(scores, input.gt_index, p.tau);

  // dL/ds_j = (p_j - [j == gt]) / tau
  Vector dscores(k);
  for (std::size_t j = 0; j < k; ++j)
    dscores[j] = (nce.probs[j] - (static_cast<int>(j) == input.gt_index ? 1.0 : 0.0)) / p.tau;

  Vector dpast(d, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    axpy(dscores[j], cand[j], dpast);
    Vector dc(d, 0.0);
    axpy(dscores[j], cache.past_feature, dc);
    const Vector draw = normalize_backward(cand[j], l2_norm(cand_raw[j]), dc);
    for (std::size_t r = 0; r < d; ++r) axpy(draw[r], input.candidates.row(j), grads.w_in.row(r));
  }

  const Vector dprojected = normalize_backward(cache.past_feature, cache.projected_norm, dpast);
  for (std::size_t r = 0; r < d; ++r) axpy(dprojected[r], cache.latent_out, grads.w_out.row(r));
  Matrix ds(kPastFrames + 1, d);
  matvec_transposed_acc(p.w_out, dprojected, ds.row(0));

  for (std::size_t i = p.blocks.size(); i-- > 0;) ds = block_backward(ds, p.blocks[i], cache.blocks[i], grads.blocks[i]);

  axpy(1.0, ds.row(0), grads.latent);
  for (std::size_t i = 0; i < kPastFrames; ++i) {
    const auto dx = ds.row(i + 1);
    for (std::size_t r = 0; r < d; ++r)
      if (dx[r] != 0.0) axpy(dx[r], input.past.row(i), grads.w_in.row(r));
  }
  return nce.loss;
}

namespace {

BatchGradient reduce_items(std::vector<ModelParams>& item_grads, std::vector<double> losses, const ModelParams& p) {
  BatchGradient out;
  out.grads = p.zeros_like();
  auto total = out.grads.tensors();
  const double inv = 1.0 / static_cast<double>(item_grads.size());
  for (auto& g : item_grads) {
    auto parts = g.tensors();
    for (std::size_t t = 0; t < parts.size(); ++t) axpy(1.0, parts[t].values, total[t].values);
  }
  for (auto& t : total)
    for (double& v : t.values) v *= inv;
  double sum = 0.0;
  for (double l : losses) sum += l;
  out.mean_loss = sum * inv;
  out.losses = std::move(losses);
  return out;
}

}  // namespace

BatchGradient batch_gradient(std::span<const ModelInput> batch, const ModelParams& p) {
  if (batch.empty()) throw_invalid("empty batch");
  std::vector<ModelParams> item_grads(batch.size());
  std::vector<double> losses(batch.size());
  std::vector<std::exception_ptr> failures(batch.size());
  const auto n = static_cast<long>(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      item_grads[idx] = p.zeros_like();
      losses[idx] = backward(batch[idx], p, item_grads[idx]);
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return reduce_items(item_grads, std::move(losses), p);
}

BatchGradient batch_gradient_serial(std::span<const ModelInput> batch, const ModelParams& p) {
  if (batch.empty()) throw_invalid("empty batch");
  std::vector<ModelParams> item_grads(batch.size());
  std::vector<double> losses(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    item_grads[i] = p.zeros_like();
    losses[i] = backward(batch[i], p, item_grads[i]);
  }
  return reduce_items(item_grads, std::move(losses), p);
}

}  // namespace pseudocam
