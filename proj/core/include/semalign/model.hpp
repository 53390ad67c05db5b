#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semalign/linalg.hpp"

namespace semalign {

struct LmConfig {
  std::size_t n_layers = 4;
  std::size_t hidden_dim = 64;
  std::size_t n_heads = 2;
  std::size_t vocab_size = 64;
  std::size_t max_seq = 32;
  std::size_t ffn_mult = 4;
  std::uint64_t seed = 0;

  std::size_t ffn_dim() const { return ffn_mult * hidden_dim; }
  std::size_t head_dim() const { return hidden_dim / n_heads; }
  // Throws ConfigError.
  void validate() const;
  bool operator==(const LmConfig&) const = default;
};

// One named parameter tensor inside the flat parameter vector.
struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  // Index of the decoder block owning this tensor, or -1 for embeddings,
  // final norm and lm_head.
  int block = -1;

  std::size_t size() const { return rows * cols; }
};

// Tensor indices of one decoder block.
struct BlockTensors {
  std::size_t ln1_g, ln1_b;
  std::size_t wq, wk, wv, wo;
  std::size_t ln2_g, ln2_b;
  std::size_t w1, b1, w2, b2;
};

// All model weights in one flat vector, addressed through a named layout.
// Layout order: tok_emb, pos_emb, blocks.0 .. blocks.{L-1}, ln_f, lm_head.
class LmParams {
 public:
  explicit LmParams(const LmConfig& config);

  const LmConfig& config() const { return config_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const BlockTensors& block(std::size_t k) const { return blocks_.at(k); }
  std::size_t tensor_index(std::string_view name) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t parameter_count() const { return values_.size(); }

  std::span<double> tensor(std::size_t index);
  std::span<const double> tensor(std::size_t index) const;
  std::span<double> tensor(std::string_view name) { return tensor(tensor_index(name)); }
  std::span<const double> tensor(std::string_view name) const {
    return tensor(tensor_index(name));
  }
  Matrix matrix(std::size_t index) const;
  void set_matrix(std::size_t index, const Matrix& m);

  // Value range [begin, end) of block k inside values().
  std::pair<std::size_t, std::size_t> block_range(std::size_t k) const;

  // D x v matrix mapping final hidden states to logits.
  Matrix lm_head() const { return matrix(lm_head_); }
  // v x D token embedding.
  Matrix embedding() const { return matrix(tok_emb_); }

  std::string checksum() const;

  std::size_t tok_emb_index() const { return tok_emb_; }
  std::size_t pos_emb_index() const { return pos_emb_; }
  std::size_t lnf_g_index() const { return lnf_g_; }
  std::size_t lnf_b_index() const { return lnf_b_; }
  std::size_t lm_head_index() const { return lm_head_; }

 private:
  LmConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<BlockTensors> blocks_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, lnf_g_ = 0, lnf_b_ = 0, lm_head_ = 0;
  std::vector<double> values_;
};

// Closed-form parameter count for a config.
std::size_t expected_parameter_count(const LmConfig& config);

// Deterministic initialization from config.seed. Throws ConfigError.
LmParams init_lm(const LmConfig& config);

// A batch of equal-length sequences. Position t of a row predicts
// target_ids at t; supervised_mask selects the positions that losses
// average over.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> target_ids;
  std::vector<std::uint8_t> supervised_mask;

  std::size_t tokens() const { return batch * seq; }
  std::size_t supervised_count() const;
};

// Values captured during a forward pass. Copies, so later parameter updates
// never change a held trace.
struct LayerTrace {
  // per_layer[l]: feed-forward output of block l before the residual add.
  std::vector<Matrix> per_layer;
  Matrix final_hidden;  // tokens x D, after the final norm
  Matrix logits;        // tokens x v
};

struct LayerCache {
  Matrix x_in;
  Matrix xhat1;
  Vector rstd1;
  Matrix a1;
  Matrix q, k, v;
  std::vector<double> probs;  // batch x heads x seq x seq
  Matrix context;             // attention output before the Wo projection
  Matrix x_mid;
  Matrix xhat2;
  Vector rstd2;
  Matrix a2;
  Matrix pre_act;   // tokens x F
  Matrix ffn_act;   // tokens x F, after GELU
};

// Everything backward() needs, plus the public trace.
struct ForwardState {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::int32_t> input_ids;
  std::vector<LayerCache> layers;
  Matrix x_final;
  Matrix xhat_f;
  Vector rstd_f;
  LayerTrace trace;
};

// Optional additive edits at the supervision interface: add_per_layer[l]
// (tokens x D, or empty) is added to block l's feed-forward output before
// the residual add.
struct Intervention {
  std::vector<Matrix> add_per_layer;
};

// Throws TokenRangeError / ShapeError.
ForwardState forward(const LmParams& params, const TokenBatch& batch,
                     const Intervention* intervention = nullptr);
LayerTrace forward_with_trace(const LmParams& params, const TokenBatch& batch);

Matrix softmax_rows(const Matrix& logits);

// Upstream gradients of a scalar loss with respect to traced values. Empty
// matrices mean "no contribution".
struct TraceSeed {
  Matrix d_logits;
  Matrix d_final_hidden;
  std::vector<Matrix> d_per_layer;
};

struct LossValue {
  double value = 0.0;
  TraceSeed seed;
};

struct Gradients {
  std::vector<double> params;  // same layout as LmParams::values()
  // Total gradient at each supervision interface (feed-forward output).
  std::vector<Matrix> d_per_layer;
  // Gradients at the GELU output and at the attention context, per block.
  std::vector<Matrix> d_ffn_act;
  std::vector<Matrix> d_context;
};

Gradients backward_from_seed(const LmParams& params, const ForwardState& state,
                             const TraceSeed& seed);

using LossFn = std::function<LossValue(const LayerTrace&, const TokenBatch&)>;

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
  ForwardState state;
};

// forward, loss, backward. Throws NumericalError on a non-finite loss.
BackwardResult backward(const LmParams& params, const TokenBatch& batch, const LossFn& loss);

// Mean cross-entropy over supervised positions. Throws EmptyMask.
double lm_loss(const LayerTrace& trace, const TokenBatch& batch);
LossValue cross_entropy_loss(const LayerTrace& trace, const TokenBatch& batch);

// Per-tensor selection of parameters the optimizer may change.
class TrainableMask {
 public:
  static TrainableMask all(const LmParams& params);
  static TrainableMask none(const LmParams& params);
  static TrainableMask blocks(const LmParams& params, std::span<const std::size_t> ks);

  bool contains(std::size_t tensor) const { return tensors_.at(tensor) != 0; }
  // Flat per-value mask over params.values().
  std::vector<std::uint8_t> expand(const LmParams& params) const;

 private:
  std::vector<std::uint8_t> tensors_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {}

  // Updates params in place. Entries whose mask value is 0 are untouched.
  void step(std::span<double> params, std::span<const double> grads,
            std::span<const std::uint8_t> mask = {});

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

// One training sequence: inputs, next-token targets, loss mask.
struct Example {
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> target_ids;
  std::vector<std::uint8_t> supervised_mask;
};

using Dataset = std::vector<Example>;

// Stacks equal-length examples. Throws ShapeError on ragged input.
TokenBatch make_batch(std::span<const Example> examples);

struct TrainConfig {
  std::size_t steps = 100;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
  // Defaults to cross_entropy_loss when empty.
  LossFn loss;
};

struct TrainReport {
  std::vector<double> losses;  // one per optimizer step, pre-update
  std::size_t steps_completed = 0;
};

// Deterministic minibatch order: shuffled epochs drawn from `seed`.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::size_t size_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// Throws NumericalError on divergence; params then hold the last finite
// state.
TrainReport train(LmParams& params, const Dataset& dataset, const TrainConfig& config,
                  const TrainableMask& mask);

}  // namespace semalign
