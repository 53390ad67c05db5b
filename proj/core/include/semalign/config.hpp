#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "semalign/baselines.hpp"
#include "semalign/model.hpp"
#include "semalign/semantics.hpp"
#include "semalign/tasks.hpp"
#include "semalign/transfer.hpp"

namespace semalign {

enum class Method { kSemalign, kSeeking, kLaten, kNone };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct StageTrainConfig {
  std::size_t steps = 400;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  Method method = Method::kSemalign;
  std::string output_dir;  // empty: $SEMALIGN_OUT or ./runs, plus a run name
  LmConfig teacher;
  LmConfig student;
  TaskSpec task;
  StageTrainConfig teacher_train;
  StageTrainConfig student_train;
  TransferConfig transfer;
  SeekingConfig seeking;
  LatenConfig laten;
  std::size_t top_n = 1;                 // critical teacher layers
  std::size_t attribution_examples = 64;
  std::size_t analysis_examples = 64;
  BasisSide target_side = BasisSide::kOutput;
  double rcond = -1.0;  // negative: 1e-10 * max(D, v)
  // Also run the output-term-only transfer with the same budget and block.
  bool control_run = true;

  // Spreads `seed` into every component seed.
  void resolve_seeds();
  // Throws ConfigError. Checks the shared vocabulary first.
  void validate() const;
};

ExperimentConfig default_config();

// Missing keys keep their defaults; unknown keys are rejected. Throws
// ConfigError whose message carries "line L, column C" and the offending
// source line for syntax errors, and the key path for schema errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical JSON echo, including resolved seeds.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace semalign
