#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semalign/model.hpp"

namespace semalign {

enum class TaskKind { kCopy, kReverse, kModularSum, kSortDigits };

std::string to_string(TaskKind kind);
// Throws ConfigError for unknown names.
TaskKind parse_task_kind(const std::string& name);

// Sequence layout: [BOS, x_1 .. x_n, SEP, answer...]. Symbols are token ids
// 0..alphabet-1; BOS = vocab-2 and SEP = vocab-1.
struct TaskSpec {
  TaskKind kind = TaskKind::kCopy;
  std::size_t vocab_size = 64;
  std::size_t seq_len = 6;  // number of operand symbols
  std::size_t train_size = 512;
  std::size_t eval_size = 128;
  std::size_t modulus = 10;   // modular_sum only
  std::size_t alphabet = 0;   // copy/reverse; 0 = vocab_size - 2
  std::uint64_t seed = 0;

  std::size_t symbol_count() const;
  std::int32_t bos() const { return static_cast<std::int32_t>(vocab_size - 2); }
  std::int32_t sep() const { return static_cast<std::int32_t>(vocab_size - 1); }
  // Model input length: full sequence minus the last token.
  std::size_t input_length() const;
  void validate() const;
};

// Reference answer for one operand sequence.
std::vector<std::int32_t> task_answer(const TaskSpec& spec, const std::vector<std::int32_t>& operands);

// Example for one operand sequence, with the mask on answer predictions.
Example make_example(const TaskSpec& spec, const std::vector<std::int32_t>& operands);

struct TaskData {
  Dataset train;
  Dataset eval;
};

// Deterministic from spec.seed; no eval operand sequence appears in train.
// Throws ConfigError when the vocabulary cannot hold the alphabet or the
// operand space is too small for the requested disjoint sizes.
TaskData generate_dataset(const TaskSpec& spec);

// Fraction of examples whose argmax prediction matches the target at every
// supervised position. With teacher forcing on the gold prefix this equals
// greedy-decode exact match: decoding diverges only after a first mistake.
// Throws ConfigError on an empty dataset.
double evaluate_accuracy(const LmParams& model, const Dataset& dataset);

}  // namespace semalign
