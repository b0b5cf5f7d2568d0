#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pseudocam/linalg.hpp"

namespace pseudocam {

struct ModelDims {
  std::size_t d_f = 0;
  std::size_t d_model = 64;
  std::size_t d_hidden = 256;
  int k = 6;
  int layers = 1;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Pre-norm single-head self-attention block followed by a GELU MLP. Linear
/// maps are stored (out x in) and carry no bias.
struct AttentionBlock {
  Matrix wq, wk, wv, wo;
  Vector ln1_scale, ln1_shift, ln2_scale, ln2_shift;
  Matrix w1;  // d_hidden x d_model
  Matrix w2;  // d_model x d_hidden

  friend bool operator==(const AttentionBlock&, const AttentionBlock&) = default;
};

/// Named view on one trainable tensor, in checkpoint order.
struct TensorView {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> values;
};

struct ModelParams {
  ModelDims dims;
  double tau = 0.07;
  std::uint64_t seed = 0;
  Matrix w_in;    // d_model x d_f, shared by past frames and candidates
  Vector latent;  // learnable query token
  std::vector<AttentionBlock> blocks;
  Matrix w_out;  // d_model x d_model

  /// Matrices uniform in +-1/sqrt(fan_in), latent zero, layer norms identity.
  static ModelParams initialize(const ModelDims& dims, double tau, std::uint64_t seed);

  /// Same shapes, all entries zero; used as a gradient accumulator.
  ModelParams zeros_like() const;

  std::vector<TensorView> tensors();
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Features of one instance, resolved from frame indices.
struct ModelInput {
  Matrix past;                // kPastFrames x d_f, most recent first
  std::vector<long> offsets;  // one per past frame
  Matrix candidates;          // k x d_f
  int gt_index = 0;
};

/// PE[2i] = sin(offset / 10000^(2i/d)), PE[2i+1] = cos(offset / 10000^(2i/d)).
Vector positional_embedding(long offset, std::size_t d_model);

/// W_in f + PE(offset).
Vector encode_frame(std::span<const double> feature, long offset, const ModelParams& p);

/// normalize(W_in f + PE(0)).
Vector encode_candidate(std::span<const double> feature, const ModelParams& p);

struct PastEncoding {
  Vector past_feature;               // unit norm
  std::vector<Matrix> attention;     // one row-stochastic matrix per block
};

/// Runs [latent, x_1..x_16] through the attention blocks and returns the
/// normalised projection of the latent token. `inputs` holds one encoded
/// frame per row.
PastEncoding encode_past(const Matrix& inputs, const ModelParams& p);

struct InfoNceResult {
  double loss = 0.0;
  Vector probs;
};

/// Softmax cross-entropy over s_j = past . c_j / tau. Inputs must be unit
/// vectors within 1e-4.
InfoNceResult info_nce(std::span<const double> past, const Matrix& candidates, int gt_index, double tau);

/// Cross-entropy from raw similarities, no norm checks.
InfoNceResult info_nce_from_scores(std::span<const double> scores, int gt_index, double tau);

/// argmax of the scores, ties to the lowest index.
int argmax_index(std::span<const double> scores);

int predict(std::span<const double> past, const Matrix& candidates);

struct ForwardResult {
  Vector past_feature;
  Matrix candidate_vecs;  // k x d_model, unit rows
  Vector scores;          // cosine similarities
  InfoNceResult nce;
  int prediction = 0;
};

ForwardResult forward(const ModelInput& input, const ModelParams& p);

/// Loss of one instance; exact gradients of it are added into `grads`.
double backward(const ModelInput& input, const ModelParams& p, ModelParams& grads);

struct BatchGradient {
  double mean_loss = 0.0;
  std::vector<double> losses;
  ModelParams grads;  // mean over the batch
};

/// Items evaluated in parallel; per-item gradients are summed in index order
/// so the result does not depend on the thread count.
BatchGradient batch_gradient(std::span<const ModelInput> batch, const ModelParams& p);

/// Single-threaded reference for batch_gradient.
BatchGradient batch_gradient_serial(std::span<const ModelInput> batch, const ModelParams& p);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace pseudocam
