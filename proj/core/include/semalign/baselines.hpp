#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semalign/linalg.hpp"
#include "semalign/model.hpp"
#include "semalign/transfer.hpp"

namespace semalign {

// ---- Seeking: sensitivity -> extraction -> SVD adapter init -> fine-tune

// Per-parameter scores in the flat LmParams layout, plus per-block sums.
struct SensitivityMap {
  std::vector<double> scores;
  std::vector<double> layer_scores;  // one per decoder block
  std::size_t seed_set_size = 0;

  Matrix tensor_scores(const LmParams& layout, std::size_t tensor) const;
};

// scores[i] += |theta[i] * grad[i]|. Throws NumericalError on a non-finite
// gradient.
void accumulate_sensitivity(std::span<const double> theta, std::span<const double> grad,
                            std::span<double> scores);

// Sum over seed examples of |theta * dCE/dtheta|, one example at a time.
// Throws ConfigError on an empty seed set.
SensitivityMap seeking_sensitivity(const LmParams& teacher, const Dataset& seed_set);

struct ExtractedBlock {
  std::size_t source_layer = 0;  // 1-based, 0 when not tied to a layer
  std::vector<std::size_t> row_indices;
  std::vector<std::size_t> col_indices;
  Matrix block;
  double cumulative_score = 0.0;
};

// Greedy: the n_s rows with the largest score sums, then the m_s columns
// with the largest sums over those rows. Lower indices win ties. Throws
// RangeError, ShapeError.
ExtractedBlock seeking_extract(const Matrix& w, const Matrix& scores, std::size_t n_s,
                               std::size_t m_s);

struct LoraPair {
  Matrix b;  // n_s x r
  Matrix a;  // r x m_s
  std::size_t rank = 0;
  bool clamped = false;  // requested rank exceeded min(n_s, m_s)
};

// B = U_r Sigma_r, A = V_r^T.
LoraPair seeking_lora_init(const ExtractedBlock& block, std::size_t r);

struct SeekingConfig {
  std::size_t seed_set_size = 16;
  std::size_t rank = 16;
  std::size_t steps = 60;
  std::size_t batch_size = 16;
  double learning_rate = 3e-4;
  std::uint64_t seed = 0;
};

// Adapter on one student matrix: effective weight = W + B A.
struct Adapter {
  std::size_t tensor = 0;  // student tensor index
  std::size_t source_layer = 0;
  LoraPair pair;
};

// Adds every adapter product to a copy of the base model.
LmParams apply_adapters(const LmParams& base, const std::vector<Adapter>& adapters);

// Teacher blocks ranked by sensitivity, the top l_s kept in depth order,
// adapters built on student wv, wo, w1, w2 and fine-tuned with cross-entropy
// on `train_set` while the base student stays frozen. `after` holds the
// merged model.
TransferResult seeking_transfer(const LmParams& teacher, const LmParams& student,
                                const Dataset& train_set, const SeekingConfig& config,
                                std::vector<Adapter>* adapters_out = nullptr);

// ---- LaTen: locate neurons -> hypernetwork pre-alignment -> inject once

// Selected units of one decoder block. Vectorized order: for each FFN
// neuron i, column i of w1 then row i of w2; then for each attention
// channel c, column c of wv then row c of wo.
struct NeuronSlice {
  std::size_t layer = 0;  // 1-based
  std::vector<std::size_t> ffn_neurons;
  std::vector<std::size_t> attn_channels;
  std::size_t hidden_dim = 0;

  std::size_t width() const { return (ffn_neurons.size() + attn_channels.size()) * 2 * hidden_dim; }
};

struct NeuronDelta {
  std::vector<NeuronSlice> slices;
  std::vector<Vector> values;  // one vectorized slice per entry of `slices`
  // Scores per layer, FFN then attention, for inspection and tests.
  std::vector<Vector> ffn_scores;
  std::vector<Vector> attn_scores;
};

// Reads the slice from a flat vector in the layout of `layout`.
Vector gather_slice(const LmParams& layout, std::span<const double> flat, const NeuronSlice& s);

// Per layer: score = mean over examples of |dCE/da * a| at the example's
// last supervised token, for FFN neurons (GELU outputs) and attention
// channels (context). Keeps the top_k FFN neurons and
// ceil(top_k * D / F) attention channels, indices ascending. Throws
// RangeError when top_k exceeds the FFN width.
NeuronDelta laten_locate(const LmParams& model, const Dataset& extract_set, std::size_t top_k);

// Two weight matrices with a ReLU in between, no biases.
class HyperNet {
 public:
  HyperNet(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, std::uint64_t seed,
           bool zero_output = false);

  Vector forward(std::span<const double> x) const;
  // Accumulates parameter gradients for upstream gradient dy into grad.
  void backward(std::span<const double> x, std::span<const double> dy,
                std::span<double> grad) const;

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

 private:
  std::size_t in_, hidden_, out_;
  std::vector<double> params_;  // w1 (in x hidden) then w2 (hidden x out)
};

struct LatenAlignResult {
  NeuronDelta student_deltas;  // slices on the student, values = g(teacher delta)
  std::vector<double> losses;  // alignment-set CE per checkpoint, step 0 first
  std::size_t best_step = 0;
  double first_loss = 0.0;
  double best_loss = 0.0;
  bool diverged = false;
};

// Trains the hypernetwork with AdamW so that the student with injected
// deltas fits align_set; teacher slice i feeds student slice i. The
// student is never modified; returns the deltas of the best checkpoint.
LatenAlignResult laten_align(HyperNet& hypernet, const NeuronDelta& teacher_deltas,
                             const LmParams& student, const NeuronDelta& student_slices,
                             const Dataset& align_set, std::size_t steps, double lr,
                             double weight_decay = 0.05);

// Adds `sign` times each delta to its slice. Throws ShapeError.
LmParams laten_inject(const LmParams& student, const NeuronDelta& deltas, double sign = 1.0);

struct LatenConfig {
  double neuron_fraction = 0.1;
  std::size_t samples = 16;
  std::size_t hidden = 32;
  std::size_t steps = 40;
  double learning_rate = 1e-5;
  double weight_decay = 0.05;
  std::uint64_t seed = 0;
};

// Locate on teacher and student, pair student layer k with teacher layer
// max(1, floor(l_t k / l_s)), align with the first `samples` examples, and
// inject once.
TransferResult laten_transfer(const LmParams& teacher, const LmParams& student,
                              const Dataset& train_set, const LatenConfig& config,
                              LatenAlignResult* align_out = nullptr);

}  // namespace semalign
