#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semalign/attribution.hpp"
#include "semalign/linalg.hpp"
#include "semalign/model.hpp"
#include "semalign/semantics.hpp"

namespace semalign {

struct TargetRecord {
  std::size_t teacher_lo = 0;
  std::size_t teacher_hi = 0;
  double lambda = 0.0;
  std::string teacher_bases_checksum;
  std::string student_bases_checksum;
};

// Frozen student-space targets for one student layer over one batch. Row i
// of `targets` belongs to token row positions[i] of the batch; only
// supervised tokens appear. Rows whose teacher hidden state was zero are
// stored as zero and count as excluded.
struct SupervisoryTarget {
  std::size_t student_layer_k = 0;  // 1-based
  Matrix targets;                   // supervised tokens x D_S
  std::vector<std::size_t> positions;
  std::size_t excluded = 0;
  TargetRecord record;

  std::string checksum() const;
};

SupervisoryTarget build_targets(const LmParams& teacher, const SemanticBasisSet& teacher_bases,
                                const SemanticBasisSet& student_bases, const PairingEntry& entry,
                                const TokenBatch& batch);

// Concatenates per-example targets into the layout of a batch built from
// those examples in order, each `seq` tokens long.
SupervisoryTarget stack_targets(const std::vector<const SupervisoryTarget*>& parts,
                                std::size_t seq);

// Value, gradient with respect to the scored matrix, and token counts.
struct CosineLoss {
  double value = 0.0;
  Matrix grad;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

// 1 - mean cos(h_t, target_t) over target rows; rows with a zero vector on
// either side are excluded. Throws ShapeError, EmptyMask when nothing is
// left.
CosineLoss cosine_layer_loss_grad(const Matrix& h, const SupervisoryTarget& target);
double cosine_layer_loss(const Matrix& h, const SupervisoryTarget& target);

// 1 - mean cos(z_t, y_t) over supervised rows, y_t the one-hot target
// (label-smoothed when smoothing > 0). Throws EmptyMask.
CosineLoss cosine_output_loss_grad(const Matrix& z, const TokenBatch& batch,
                                   double label_smoothing = 0.0);
double cosine_output_loss(const Matrix& z, const TokenBatch& batch, double label_smoothing = 0.0);

struct LossBreakdown {
  double layer_loss = 0.0;
  double out_loss = 0.0;
  double total = 0.0;
};

LossBreakdown semalign_total_loss(const LmParams& student, const TokenBatch& batch,
                                  const SupervisoryTarget& target);

// Loss for backward(): mean layer term over `targets` plus the output term.
// An empty target list or use_layer_loss = false leaves the output term
// alone. `last` receives the breakdown of the latest evaluation.
LossFn semalign_loss_fn(std::vector<SupervisoryTarget> targets, bool use_layer_loss,
                        double label_smoothing, LossBreakdown* last = nullptr);

struct TransferConfig {
  // 0 selects the partner layers from the pairing plan.
  std::size_t student_layer_k = 0;
  std::size_t steps = 40;
  std::size_t align_size = 64;
  std::size_t train_size = 128;
  std::size_t batch_size = 16;
  double learning_rate = 3e-4;
  double label_smoothing = 0.0;
  bool use_layer_loss = true;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

struct ParameterCensus {
  std::vector<std::string> changed_tensors;
  std::size_t changed_values = 0;
};

// Tensors whose values differ bitwise between two same-shaped models.
ParameterCensus parameter_census(const LmParams& before, const LmParams& after);

struct TransferResult {
  std::string method;
  std::string status = "ok";  // "ok" or "diverged"
  std::string message;
  std::optional<LmParams> before;
  std::optional<LmParams> after;
  std::vector<std::size_t> trained_blocks;  // 1-based
  std::vector<double> layer_loss;           // per step
  std::vector<double> out_loss;
  std::vector<double> total_loss;
  double align_layer_loss_start = 0.0;  // over the whole alignment set
  double align_layer_loss_end = 0.0;
  std::size_t steps_completed = 0;
  std::string targets_checksum_before;
  std::string targets_checksum_after;
  ParameterCensus census;
  TransferConfig config;
  // Free-form extra fields for baseline methods, serialized as strings.
  std::vector<std::pair<std::string, std::string>> notes;
};

struct BasisPair {
  SemanticBasisSet teacher;
  SemanticBasisSet student;
};

// Trains every parameter of the paired student block(s) on the two-term
// cosine objective. Everything else stays bitwise fixed. On divergence the
// result holds the last finite state with status "diverged".
TransferResult run_transfer(const LmParams& teacher, const LmParams& student,
                            const PairingPlan& pairing, const BasisPair& bases,
                            const Dataset& dataset, const TransferConfig& config);

std::string transfer_result_to_json(const TransferResult& result);

}  // namespace semalign
